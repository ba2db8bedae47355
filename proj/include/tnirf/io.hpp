#pragma once

#include "tnirf/core.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tnirf {

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);
/// Strict parse of a whole field; throws IoError naming `what` on failure.
double parse_double(const std::string& field, const std::string& what);
long long parse_int(const std::string& field, const std::string& what);

/// Comma-separated row with LF ending. Fields are written as-is.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);
/// Splits one CSV line (no quoting) after stripping a trailing CR.
std::vector<std::string> split_csv_line(std::string line);

// --- temporal networks ----------------------------------------------------------

/// Arc list CSV: header `t,i,j`, one row per arc in snapshot order with t the
/// snapshot timestamp and i, j node indices. Undirected edges appear once
/// with i < j.
void write_network_csv(std::ostream& out, const TemporalNetwork& net);
/// {n, directed, T, node_labels, timestamps}.
nlohmann::ordered_json network_header(const TemporalNetwork& net);
TemporalNetwork read_network(std::istream& csv, const nlohmann::json& header);

void save_network(const TemporalNetwork& net, const std::filesystem::path& csv_path,
                  const std::filesystem::path& header_path);
TemporalNetwork load_network(const std::filesystem::path& csv_path, const std::filesystem::path& header_path);

// --- fitness series -------------------------------------------------------------

/// Header `t,node,coordinate_kind,value`; kinds are undirected, in or out.
void write_fitness_csv(std::ostream& out, const FitnessSeries& series);
FitnessSeries read_fitness_csv(std::istream& in);

// --- files ----------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
/// Writes bytes exactly (binary mode); creates parent directories.
void write_file(const std::filesystem::path& path, const std::string& contents);
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Two-space indented JSON with a trailing LF.
std::string dump_json(const nlohmann::ordered_json& j);

}  // namespace tnirf
