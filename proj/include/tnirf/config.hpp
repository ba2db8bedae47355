#pragma once

#include "tnirf/core.hpp"
#include "tnirf/estimation.hpp"
#include "tnirf/irf.hpp"
#include "tnirf/sampling.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tnirf {

struct SchemaIssue {
  std::string pointer;
  std::string message;
};

/// Validates against the JSON Schema subset used by the shipped schema:
/// type, enum, minimum, maximum, exclusiveMinimum, minItems, maxItems,
/// items, properties, required, additionalProperties (false), anyOf and
/// if/then/else.
std::vector<SchemaIssue> validate_against_schema(const nlohmann::json& instance, const nlohmann::json& schema);

/// The versioned run-configuration schema (schema/config.schema.json).
const nlohmann::json& config_schema();

struct ModelConfig {
  bool meanfield = true;
  bool directed = false;
  MeanFieldParams mf;
  VarParams var;
  std::optional<Vector> theta0;  // empty: stationary mean

  std::size_t n() const;
  const VarParams& var_params() const { return var; }
  /// theta0 (scalar values are broadcast) or the stationary mean.
  FitnessState initial_state() const;
};

struct ShockConfig {
  std::optional<std::size_t> node = 0;  // empty: node with the largest out-degree
  CoordinateKind coordinate = CoordinateKind::undirected;
  double delta = -10.0;
  std::size_t horizon = 20;
};

struct McConfig {
  std::size_t n_samples = 10000;
  McEstimator estimator = McEstimator::rao_blackwell;
  std::string metric = "density";
  std::size_t paths = 0;  // > 0: replicate-path mode with percentile bands
  bool exact_integral = false;
};

struct EstimationConfig {
  std::string method = "kfssi";
  KfssiOptions kfssi;
};

struct GridConfig {
  std::vector<double> m{-3, -2, -1, -0.5, 0, 0.5, 1, 2, 3};
  std::vector<double> s2{0.01, 0.1, 0.5, 1, 2};
  std::vector<double> r{0.0, 0.5};
};

struct RunConfig {
  nlohmann::json raw;
  std::optional<std::uint64_t> seed;
  std::optional<ModelConfig> model;
  std::size_t T = 100;
  ShockConfig shock;
  McConfig mc;
  EstimationConfig estimation;
  BenchmarkConfig benchmark;
  SweepConfig sweep;
  GridConfig grid;
};

/// Schema validation plus semantic checks (matrix shapes, theta0 length).
/// Throws ConfigError carrying the JSON pointer of the first problem.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);
/// SHA-256 of the compact, key-sorted serialization.
std::string config_hash(const nlohmann::json& doc);

}  // namespace tnirf
