#include "tnirf/sampling.hpp"

#include "tnirf/errors.hpp"
#include "tnirf/gaussian_logistic.hpp"
#include "tnirf/parallel.hpp"

#include <cmath>

namespace tnirf {

namespace {

void check_orientation(const FitnessState& state, bool directed) {
  if (state.is_directed() && !directed)
    throw DomainError("cannot sample an undirected network from a directed fitness state");
}

}  // namespace

double link_probability(double theta_out_i, double theta_in_j) noexcept {
  return sigmoid(theta_out_i + theta_in_j);
}

std::size_t sampled_pair_count(std::size_t n, bool directed) noexcept {
  return directed ? n * (n - 1) : n * (n - 1) / 2;
}

AdjacencySnapshot sample_network(const FitnessState& state, bool directed, std::uint64_t seed) {
  Rng rng = make_stream(seed);
  return sample_network(state, directed, rng);
}

AdjacencySnapshot sample_network(const FitnessState& state, bool directed, Rng& rng) {
  check_orientation(state, directed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> u(sampled_pair_count(state.n(), directed));
  for (auto& x : u) x = unif(rng);
  return threshold_network(state, directed, u);
}

AdjacencySnapshot threshold_network(const FitnessState& state, bool directed, const std::vector<double>& uniforms) {
  check_orientation(state, directed);
  const std::size_t n = state.n();
  if (uniforms.size() != sampled_pair_count(n, directed))
    throw DimensionError("threshold_network: wrong number of uniforms");
  AdjacencySnapshot A(n, directed);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = directed ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      if (uniforms[k++] < link_probability(state.out(i), state.in(j))) A.set_arc(i, j);
    }
  }
  return A;
}

double density(const AdjacencySnapshot& A) {
  if (A.n() < 2) throw DomainError("density needs at least two nodes");
  const double n = static_cast<double>(A.n());
  return static_cast<double>(A.arc_count()) / (n * (n - 1.0));
}

Degrees degrees(const AdjacencySnapshot& A) {
  Degrees d{std::vector<std::size_t>(A.n(), 0), std::vector<std::size_t>(A.n(), 0)};
  for (std::size_t i = 0; i < A.n(); ++i)
    for (std::size_t j = 0; j < A.n(); ++j)
      if (A.has_arc(i, j)) {
        ++d.out[i];
        ++d.in[j];
      }
  return d;
}

double expected_density_given(const FitnessState& state, bool directed) {
  check_orientation(state, directed);
  const std::size_t n = state.n();
  if (n < 2) throw DomainError("density needs at least two nodes");
  double total = 0.0;
  if (directed) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) total += link_probability(state.out(i), state.in(j));
    return total / (static_cast<double>(n) * static_cast<double>(n - 1));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) total += link_probability(state.out(i), state.in(j));
  return 2.0 * total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

MetricRegistry MetricRegistry::with_builtins() {
  MetricRegistry r;
  r.add({"density", [](const AdjacencySnapshot& A) { return density(A); },
         [](const FitnessState& s, bool directed) { return expected_density_given(s, directed); }});
  // Average out-degree; equals (n - 1) * density in both orientations.
  r.add({"mean_degree",
         [](const AdjacencySnapshot& A) { return static_cast<double>(A.arc_count()) / static_cast<double>(A.n()); },
         [](const FitnessState& s, bool directed) {
           return static_cast<double>(s.n() - 1) * expected_density_given(s, directed);
         }});
  return r;
}

void MetricRegistry::add(Metric metric) {
  if (!metric.evaluate) throw DomainError("metric '" + metric.name + "' has no evaluator");
  auto name = metric.name;
  metrics_.insert_or_assign(std::move(name), std::move(metric));
}

const Metric& MetricRegistry::get(const std::string& name) const {
  auto it = metrics_.find(name);
  if (it == metrics_.end()) throw DomainError("unknown metric '" + name + "'");
  return it->second;
}

std::vector<std::string> MetricRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : metrics_) out.push_back(k);
  return out;
}

McEstimate summarize(const std::vector<double>& values) {
  McEstimate e;
  const auto N = static_cast<double>(values.size());
  if (values.empty()) return e;
  double sum = 0.0;
  for (double v : values) sum += v;
  e.estimate = sum / N;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - e.estimate) * (v - e.estimate);
    e.variance = ss / (N - 1.0);
    e.std_error = std::sqrt(e.variance / N);
  }
  return e;
}

double metric_value(const Metric& metric, const FitnessState& state, bool directed, McEstimator estimator,
                    const std::vector<double>& uniforms) {
  if (estimator == McEstimator::rao_blackwell && metric.conditional_mean)
    return metric.conditional_mean(state, directed);
  return metric.evaluate(threshold_network(state, directed, uniforms));
}

McEstimate mc_expected_metric(const Metric& metric, const GaussianMoments& moments, bool directed,
                              const McOptions& options) {
  if (options.n_samples < 2) throw DomainError("mc_expected_metric needs at least 2 samples");
  moments.validate();
  const Matrix root = psd_sqrt(moments.cov);
  const auto d = static_cast<Eigen::Index>(moments.dim());
  if (directed && d % 2 != 0) throw DimensionError("directed moments need an even dimension");
  const std::size_t n = directed ? static_cast<std::size_t>(d) / 2 : static_cast<std::size_t>(d);
  const bool need_uniforms = !(options.estimator == McEstimator::rao_blackwell && metric.conditional_mean);

  std::vector<double> values(options.n_samples);
  FirstException failure;
  const auto count = static_cast<long long>(options.n_samples);
#pragma omp parallel for schedule(static) num_threads(resolve_threads(options.threads))
  for (long long k = 0; k < count; ++k) {
    failure.run([&] {
      Rng rng = make_stream(options.seed, {static_cast<std::uint64_t>(k)});
      std::normal_distribution<double> normal;
      Vector z(d);
      for (Eigen::Index c = 0; c < d; ++c) z[c] = normal(rng);
      const FitnessState state(moments.mean + root * z, directed);
      std::vector<double> u;
      if (need_uniforms) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        u.resize(sampled_pair_count(n, directed));
        for (auto& x : u) x = unif(rng);
      }
      values[static_cast<std::size_t>(k)] = metric_value(metric, state, directed, options.estimator, u);
    });
  }
  failure.rethrow();
  return summarize(values);
}

}  // namespace tnirf
