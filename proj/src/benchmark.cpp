#include "tnirf/estimation.hpp"

#include "tnirf/errors.hpp"
#include "tnirf/parallel.hpp"
#include "tnirf/rng.hpp"
#include "tnirf/sampling.hpp"
#include "tnirf/var_dynamics.hpp"

#include <cmath>

namespace tnirf {

MeanFieldParams BenchmarkConfig::truth() const {
  if (n < 2) throw ValidationError("benchmark needs n >= 2");
  MeanFieldParams mf{a, b, mu, sigma * sigma, n, 1.0};
  if (b_convention == "row_total") {
    mf.p = 1.0 / static_cast<double>(n - 1);
  } else if (b_convention != "entry") {
    throw ValidationError("unknown b convention '" + b_convention + "'");
  }
  return mf;
}

MethodErrors BenchmarkReport::reference_nssi() { return {0.57, 0.0, 0.605, 0.009, 0.311, 0.375}; }
MethodErrors BenchmarkReport::reference_kfssi() { return {0.404, 0.0, 0.124, 0.023, 0.118, 0.144}; }

namespace {

double rel(double est, double truth) { return std::abs(est - truth) / std::abs(truth); }

void fitness_errors(const FitnessSeries& est, const FitnessSeries& truth, MethodErrors& e) {
  double abs_sum = 0.0, rel_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const Vector diff = (est.states[t].values() - truth.states[t].values()).cwiseAbs();
    abs_sum += diff.sum();
    rel_sum += diff.cwiseQuotient(truth.states[t].values().cwiseAbs()).sum();
    count += static_cast<std::size_t>(diff.size());
  }
  e.theta = abs_sum / static_cast<double>(count);
  e.theta_rel = rel_sum / static_cast<double>(count);
}

void parameter_errors(const MeanFieldParams& est, const MeanFieldParams& truth, MethodErrors& e) {
  e.a = rel(est.a, truth.a);
  e.b = rel(est.effective_b(), truth.effective_b());
  e.mu = rel(est.mu, truth.mu);
  e.sigma2 = rel(est.sigma2, truth.sigma2);
}

BenchmarkReplicate run_replicate(const BenchmarkConfig& cfg, const MeanFieldParams& truth, std::uint64_t seed,
                                 std::size_t index) {
  BenchmarkReplicate rep;
  rep.index = index;
  Rng rng = make_stream(seed, {0, index});
  const VarParams var = truth.to_var();
  const double theta_s = truth.mu / (1.0 - truth.lambda1());
  const FitnessState theta0(Vector::Constant(static_cast<Eigen::Index>(cfg.n), theta_s), false);
  const FitnessSeries theta = simulate_var(var, theta0, cfg.T, rng);

  std::vector<AdjacencySnapshot> snaps;
  for (std::size_t t = 0; t < cfg.T; ++t) {
    snaps.push_back(sample_network(theta.states[t], false, rng));
    snaps.back().set_timestamp(static_cast<std::int64_t>(t + 1));
  }
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < cfg.n; ++i) labels.push_back(std::to_string(i));
  const MleSeries mle = mle_series(TemporalNetwork(std::move(snaps), std::move(labels)));
  std::size_t clipped = 0;
  for (const auto& row : mle.clipped)
    for (bool c : row) clipped += c ? 1 : 0;
  rep.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(cfg.T * cfg.n);
  if (mle.unconverged == cfg.T) {
    rep.dropped = true;
    rep.error = "MLE failed on every snapshot";
    return rep;
  }

  try {
    const NssiMeanField ns = nssi_fit_meanfield(mle.theta_hats, mle.clipped);
    parameter_errors(ns.params, truth, rep.nssi);
    fitness_errors(mle.theta_hats, theta, rep.nssi);

    KfssiOptions opt;
    opt.mode = FitMode::meanfield;
    opt.free_gamma = cfg.free_gamma;
    opt.restarts = cfg.restarts;
    opt.seed = make_stream(seed, {1, index})();
    const KfssiResult kf = kfssi_fit(mle.theta_hats, mle.clipped, opt);
    parameter_errors(*kf.meanfield, truth, rep.kfssi);
    fitness_errors(kf.filtered, theta, rep.kfssi);
  } catch (const Error& e) {
    rep.dropped = true;
    rep.error = e.what();
  }
  return rep;
}

void accumulate(MethodErrors& sum, const MethodErrors& e) {
  sum.theta += e.theta;
  sum.theta_rel += e.theta_rel;
  sum.a += e.a;
  sum.b += e.b;
  sum.mu += e.mu;
  sum.sigma2 += e.sigma2;
}

MethodErrors scaled(MethodErrors e, double k) {
  e.theta *= k;
  e.theta_rel *= k;
  e.a *= k;
  e.b *= k;
  e.mu *= k;
  e.sigma2 *= k;
  return e;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config, std::uint64_t seed) {
  if (config.n_sim == 0) throw ValidationError("benchmark needs n_sim >= 1");
  if (config.T < 5) throw ValidationError("benchmark needs T >= 5");
  if (!(config.sigma >= 0.0)) throw ValidationError("benchmark sigma must be >= 0");
  const MeanFieldParams truth = config.truth();
  if (!truth.is_stationary())
    throw StationarityError("benchmark parameters are not stationary (lambda1 = " + std::to_string(truth.lambda1()) +
                            ")");

  BenchmarkReport report;
  report.config = config;
  report.seed = seed;
  report.replicates.resize(config.n_sim);
  const auto count = static_cast<long long>(config.n_sim);
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(config.threads))
  for (long long k = 0; k < count; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    try {
      report.replicates[idx] = run_replicate(config, truth, seed, idx);
    } catch (const std::exception& e) {
      report.replicates[idx].index = idx;
      report.replicates[idx].dropped = true;
      report.replicates[idx].error = e.what();
    }
  }
  std::size_t kept = 0;
  for (const auto& r : report.replicates) {
    if (r.dropped) {
      ++report.dropped;
      continue;
    }
    accumulate(report.nssi, r.nssi);
    accumulate(report.kfssi, r.kfssi);
    ++kept;
  }
  if (kept == 0) throw NumericalError("every benchmark replicate was dropped");
  report.nssi = scaled(report.nssi, 1.0 / static_cast<double>(kept));
  report.kfssi = scaled(report.kfssi, 1.0 / static_cast<double>(kept));
  return report;
}

}  // namespace tnirf
