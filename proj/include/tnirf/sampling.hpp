#pragma once

#include "tnirf/core.hpp"
#include "tnirf/rng.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tnirf {

/// P(a_ij = 1) = sigmoid(theta_out_i + theta_in_j).
double link_probability(double theta_out_i, double theta_in_j) noexcept;

/// Independent Bernoulli arcs. Undirected mode draws each pair i < j once
/// and mirrors it; directed mode draws every ordered pair i != j.
AdjacencySnapshot sample_network(const FitnessState& state, bool directed, std::uint64_t seed);
AdjacencySnapshot sample_network(const FitnessState& state, bool directed, Rng& rng);

/// Snapshot whose arc (i, j) exists iff uniforms[k] < p_ij, k running over
/// the sampled pairs in row-major order. Lets two fitness states share the
/// same edge randomness.
AdjacencySnapshot threshold_network(const FitnessState& state, bool directed, const std::vector<double>& uniforms);
std::size_t sampled_pair_count(std::size_t n, bool directed) noexcept;

/// sum a_ij / (n (n - 1)) over ordered pairs.
double density(const AdjacencySnapshot& A);

struct Degrees {
  std::vector<std::size_t> in;
  std::vector<std::size_t> out;  // equals `in` for undirected snapshots
};
Degrees degrees(const AdjacencySnapshot& A);

/// Mean link probability over ordered pairs, i.e. E[density | theta].
double expected_density_given(const FitnessState& state, bool directed);

/// A named scalar function of a snapshot. When `conditional_mean` is set it
/// returns E[f(A) | theta] exactly and Monte Carlo uses it instead of
/// sampling edges.
struct Metric {
  std::string name;
  std::function<double(const AdjacencySnapshot&)> evaluate;
  std::function<double(const FitnessState&, bool directed)> conditional_mean;
};

class MetricRegistry {
public:
  /// density and mean_degree.
  static MetricRegistry with_builtins();

  void add(Metric metric);
  /// Throws DomainError for unknown names.
  const Metric& get(const std::string& name) const;
  std::vector<std::string> names() const;

private:
  std::map<std::string, Metric> metrics_;
};

enum class McEstimator { rao_blackwell, edge_sampled };

struct McOptions {
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
  McEstimator estimator = McEstimator::rao_blackwell;
  /// 0 lets OpenMP decide. Never changes results.
  int threads = 0;
};

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  /// Sample variance of the per-draw values.
  double variance = 0.0;
};

/// E[f(A)] with theta ~ N(moments) and A | theta from the fitness model.
McEstimate mc_expected_metric(const Metric& metric, const GaussianMoments& moments, bool directed,
                              const McOptions& options);

/// Mean and standard error of the mean of a sample.
McEstimate summarize(const std::vector<double>& values);

/// Metric value for one fitness draw: conditional mean under Rao-Blackwell
/// (when available), otherwise thresholded uniforms.
double metric_value(const Metric& metric, const FitnessState& state, bool directed, McEstimator estimator,
                    const std::vector<double>& uniforms);

}  // namespace tnirf
