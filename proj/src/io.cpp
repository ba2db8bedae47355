#include "tnirf/io.hpp"

#include "tnirf/errors.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace tnirf {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, p);
}

double parse_double(const std::string& field, const std::string& what) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || p != end || field.empty()) throw IoError("bad number '" + field + "' in " + what);
  return v;
}

long long parse_int(const std::string& field, const std::string& what) {
  long long v = 0;
  const char* end = field.data() + field.size();
  const auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || p != end || field.empty()) throw IoError("bad integer '" + field + "' in " + what);
  return v;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out << ',';
    out << fields[k];
  }
  out << '\n';
}

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// --- temporal networks ----------------------------------------------------------

void write_network_csv(std::ostream& out, const TemporalNetwork& net) {
  write_csv_row(out, {"t", "i", "j"});
  for (const auto& s : net.snapshots()) {
    const std::string t = std::to_string(s.timestamp());
    for (const auto& [i, j] : s.arcs()) write_csv_row(out, {t, std::to_string(i), std::to_string(j)});
  }
}

ordered_json network_header(const TemporalNetwork& net) {
  ordered_json h;
  h["n"] = net.n();
  h["directed"] = net.directed();
  h["T"] = net.size();
  h["node_labels"] = net.node_labels();
  std::vector<std::int64_t> ts;
  for (const auto& s : net.snapshots()) ts.push_back(s.timestamp());
  h["timestamps"] = ts;
  return h;
}

TemporalNetwork read_network(std::istream& csv, const json& header) {
  std::size_t n = 0, T = 0;
  bool directed = false;
  std::vector<std::string> labels;
  std::vector<std::int64_t> ts;
  try {
    n = header.at("n").get<std::size_t>();
    directed = header.at("directed").get<bool>();
    T = header.at("T").get<std::size_t>();
    labels = header.at("node_labels").get<std::vector<std::string>>();
    if (header.contains("timestamps")) {
      ts = header.at("timestamps").get<std::vector<std::int64_t>>();
    } else {
      for (std::size_t k = 0; k < T; ++k) ts.push_back(static_cast<std::int64_t>(k + 1));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("network header: ") + e.what());
  }
  if (labels.size() != n) throw IoError("network header: node_labels has " + std::to_string(labels.size()) + " entries, n = " + std::to_string(n));
  if (ts.size() != T) throw IoError("network header: timestamps has " + std::to_string(ts.size()) + " entries, T = " + std::to_string(T));

  std::vector<AdjacencySnapshot> snaps;
  std::map<std::int64_t, std::size_t> slot;
  for (std::size_t k = 0; k < T; ++k) {
    snaps.emplace_back(n, directed, ts[k]);
    if (!slot.emplace(ts[k], k).second) throw IoError("network header: duplicate timestamp " + std::to_string(ts[k]));
  }

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(csv, line)) {
    ++lineno;
    if (lineno == 1) {
      if (split_csv_line(line) != std::vector<std::string>{"t", "i", "j"})
        throw IoError("network CSV header must be t,i,j");
      continue;
    }
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string where = "network CSV line " + std::to_string(lineno);
    if (f.size() != 3) throw IoError(where + ": expected 3 fields");
    const auto t = parse_int(f[0], where);
    const auto i = parse_int(f[1], where);
    const auto j = parse_int(f[2], where);
    const auto it = slot.find(t);
    if (it == slot.end()) throw IoError(where + ": timestamp " + f[0] + " not in header");
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n)
      throw IoError(where + ": node index out of range");
    try {
      snaps[it->second].set_arc(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    } catch (const ValidationError& e) {
      throw IoError(where + ": " + e.what());
    }
  }
  if (lineno == 0) throw IoError("network CSV is empty");
  try {
    return TemporalNetwork(std::move(snaps), std::move(labels));
  } catch (const ValidationError& e) {
    throw IoError(std::string("network: ") + e.what());
  }
}

void save_network(const TemporalNetwork& net, const std::filesystem::path& csv_path,
                  const std::filesystem::path& header_path) {
  std::ostringstream csv;
  write_network_csv(csv, net);
  write_file(csv_path, csv.str());
  write_file(header_path, dump_json(network_header(net)));
}

TemporalNetwork load_network(const std::filesystem::path& csv_path, const std::filesystem::path& header_path) {
  const json header = read_json_file(header_path);
  std::istringstream csv(read_file(csv_path));
  return read_network(csv, header);
}

// --- fitness series -------------------------------------------------------------

void write_fitness_csv(std::ostream& out, const FitnessSeries& series) {
  series.validate();
  write_csv_row(out, {"t", "node", "coordinate_kind", "value"});
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series.states[k];
    const std::string t = std::to_string(series.time(k));
    const std::size_t n = s.n();
    if (s.is_directed()) {
      for (std::size_t i = 0; i < n; ++i) write_csv_row(out, {t, std::to_string(i), "in", format_double(s.in(i))});
      for (std::size_t i = 0; i < n; ++i) write_csv_row(out, {t, std::to_string(i), "out", format_double(s.out(i))});
    } else {
      for (std::size_t i = 0; i < n; ++i)
        write_csv_row(out, {t, std::to_string(i), "undirected", format_double(s.in(i))});
    }
  }
}

FitnessSeries read_fitness_csv(std::istream& in) {
  struct Row {
    std::size_t node;
    CoordinateKind kind;
    double value;
  };
  std::vector<std::int64_t> times;
  std::vector<std::vector<Row>> groups;
  std::string line;
  std::size_t lineno = 0;
  std::optional<bool> directed;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (split_csv_line(line) != std::vector<std::string>{"t", "node", "coordinate_kind", "value"})
        throw IoError("fitness CSV header must be t,node,coordinate_kind,value");
      continue;
    }
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string where = "fitness CSV line " + std::to_string(lineno);
    if (f.size() != 4) throw IoError(where + ": expected 4 fields");
    const auto t = parse_int(f[0], where);
    const auto node = parse_int(f[1], where);
    if (node < 0) throw IoError(where + ": negative node index");
    CoordinateKind kind;
    if (f[2] == "undirected") kind = CoordinateKind::undirected;
    else if (f[2] == "in") kind = CoordinateKind::in;
    else if (f[2] == "out") kind = CoordinateKind::out;
    else throw IoError(where + ": unknown coordinate kind '" + f[2] + "'");
    const bool dir = kind != CoordinateKind::undirected;
    if (directed && *directed != dir) throw IoError(where + ": mixes directed and undirected coordinates");
    directed = dir;
    if (times.empty() || times.back() != t) {
      if (!times.empty() && t <= times.back()) throw IoError(where + ": time index not increasing");
      times.push_back(t);
      groups.emplace_back();
    }
    groups.back().push_back({static_cast<std::size_t>(node), kind, parse_double(f[3], where)});
  }
  if (lineno == 0) throw IoError("fitness CSV is empty");

  FitnessSeries series;
  series.times = times;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    std::size_t n = 0;
    for (const auto& r : groups[k]) n = std::max(n, r.node + 1);
    const std::size_t dim = *directed ? 2 * n : n;
    Vector v = Vector::Constant(static_cast<Eigen::Index>(dim), std::numeric_limits<double>::quiet_NaN());
    for (const auto& r : groups[k]) v[static_cast<Eigen::Index>(coordinate_index(r.kind, r.node, n))] = r.value;
    if (!v.allFinite() || groups[k].size() != dim)
      throw IoError("fitness CSV: incomplete or duplicated coordinates at t=" + std::to_string(times[k]));
    series.states.emplace_back(std::move(v), *directed);
  }
  try {
    series.validate();
  } catch (const Error& e) {
    throw IoError(std::string("fitness CSV: ") + e.what());
  }
  return series;
}

// --- files ----------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace tnirf
