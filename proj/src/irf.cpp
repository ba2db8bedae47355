#include "tnirf/irf.hpp"

#include "tnirf/errors.hpp"
#include "tnirf/gaussian_logistic.hpp"
#include "tnirf/parallel.hpp"
#include "tnirf/var_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tnirf {

Vector irf_theta(const Matrix& B, const Vector& delta, std::size_t t) {
  if (B.rows() != B.cols() || B.cols() != delta.size()) throw DimensionError("irf_theta: B and delta disagree");
  Vector v = delta;
  for (std::size_t k = 0; k < t; ++k) v = B * v;
  return v;
}

Vector irf_theta(const MeanFieldParams& mf, const Vector& delta, std::size_t t) {
  if (static_cast<std::size_t>(delta.size()) != mf.n) throw DimensionError("irf_theta: delta has wrong length");
  return meanfield_matrix_power(mf, t) * delta;
}

double irf_density_meanfield(const MeanFieldParams& mf, double theta0, double delta, std::size_t t,
                             bool exact_integral) {
  mf.validate();
  if (t == 0) throw DomainError("density IRF is defined for horizons t >= 1");
  if (!mf.is_stationary())
    throw StationarityError("mean-field model is not stationary (lambda1 = " + std::to_string(mf.lambda1()) + ")");
  const auto integral = exact_integral ? logistic_normal_exact : logistic_normal_approx2;
  const double n = static_cast<double>(mf.n);
  const MeanFieldMoments m = meanfield_conditional_moments(mf, theta0, t);
  const ShockedMeans s = shocked_means(mf, theta0, delta, t);
  const double v = 2.0 * m.variance * (1.0 + m.correlation);
  return 2.0 / n * integral(s.shocked + s.others, v) + (n - 2.0) / n * integral(2.0 * s.others, v) -
         integral(2.0 * m.mean, v);
}

namespace {

void check_shock(const VarParams& params, const FitnessState& theta_tau, const ShockSpec& shock) {
  params.validate();
  if (theta_tau.dim() != params.dim()) throw DimensionError("theta_tau does not match the VAR dimension");
  if (static_cast<std::size_t>(shock.delta.size()) != params.dim())
    throw DimensionError("shock vector does not match the VAR dimension");
  if (!shock.delta.allFinite()) throw ValidationError("shock vector has non-finite entries");
}

bool needs_uniforms(const Metric& metric, const McOptions& options) {
  return !(options.estimator == McEstimator::rao_blackwell && metric.conditional_mean);
}

}  // namespace

IrfSeries irf_metric_mc(const VarParams& params, const FitnessState& theta_tau, const ShockSpec& shock,
                        const Metric& metric, std::size_t horizon, const McOptions& options) {
  check_shock(params, theta_tau, shock);
  if (options.n_samples < 2) throw DomainError("irf_metric_mc needs at least 2 samples");
  const bool directed = theta_tau.is_directed();
  const std::size_t n = theta_tau.n();
  const auto d = static_cast<Eigen::Index>(params.dim());
  const bool uniforms = needs_uniforms(metric, options);

  IrfSeries series{metric.name, {}};
  GaussianMoments moments{theta_tau.values(), Matrix::Zero(d, d)};
  Vector shift = shock.delta;
  std::vector<double> diffs(options.n_samples);
  FirstException failure;
  const auto count = static_cast<long long>(options.n_samples);
  for (std::size_t t = 1; t <= horizon; ++t) {
    moments.mean = params.mu + params.B * moments.mean;
    moments.cov = params.B * moments.cov * params.B.transpose() + params.Sigma;
    moments.cov = 0.5 * (moments.cov + moments.cov.transpose());
    shift = params.B * shift;
    const Matrix root = psd_sqrt(moments.cov);
#pragma omp parallel for schedule(static) num_threads(resolve_threads(options.threads))
    for (long long k = 0; k < count; ++k) {
      failure.run([&] {
        Rng rng = make_stream(options.seed, {static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(k)});
        std::normal_distribution<double> normal;
        Vector z(d);
        for (Eigen::Index c = 0; c < d; ++c) z[c] = normal(rng);
        const Vector base = moments.mean + root * z;
        std::vector<double> u;
        if (uniforms) {
          std::uniform_real_distribution<double> unif(0.0, 1.0);
          u.resize(sampled_pair_count(n, directed));
          for (auto& x : u) x = unif(rng);
        }
        const double f_shock =
            metric_value(metric, FitnessState(base + shift, directed), directed, options.estimator, u);
        const double f_base = metric_value(metric, FitnessState(base, directed), directed, options.estimator, u);
        diffs[static_cast<std::size_t>(k)] = f_shock - f_base;
      });
    }
    failure.rethrow();
    const McEstimate e = summarize(diffs);
    series.points.push_back({t, e.estimate, e.std_error});
  }
  return series;
}

IrfPaths irf_paths_mc(const VarParams& params, const FitnessState& theta_tau, const ShockSpec& shock,
                      const Metric& metric, std::size_t horizon, const McOptions& options) {
  check_shock(params, theta_tau, shock);
  if (options.n_samples < 1) throw DomainError("irf_paths_mc needs at least one replicate");
  const bool directed = theta_tau.is_directed();
  const std::size_t n = theta_tau.n();
  const auto d = static_cast<Eigen::Index>(params.dim());
  const bool uniforms = needs_uniforms(metric, options);
  const Matrix root = psd_sqrt(params.Sigma);

  IrfPaths out;
  out.paths.assign(options.n_samples, std::vector<double>(horizon, 0.0));
  FirstException failure;
  const auto count = static_cast<long long>(options.n_samples);
#pragma omp parallel for schedule(static) num_threads(resolve_threads(options.threads))
  for (long long k = 0; k < count; ++k) {
    failure.run([&] {
      Rng rng = make_stream(options.seed, {static_cast<std::uint64_t>(k)});
      std::normal_distribution<double> normal;
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      Vector base = theta_tau.values();
      Vector shocked = base + shock.delta;
      Vector z(d);
      std::vector<double> u;
      auto& path = out.paths[static_cast<std::size_t>(k)];
      for (std::size_t t = 0; t < horizon; ++t) {
        for (Eigen::Index c = 0; c < d; ++c) z[c] = normal(rng);
        const Vector noise = root * z;
        base = params.mu + params.B * base + noise;
        shocked = params.mu + params.B * shocked + noise;
        if (uniforms) {
          u.resize(sampled_pair_count(n, directed));
          for (auto& x : u) x = unif(rng);
        }
        path[t] = metric_value(metric, FitnessState(shocked, directed), directed, options.estimator, u) -
                  metric_value(metric, FitnessState(base, directed), directed, options.estimator, u);
      }
    });
  }
  failure.rethrow();
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<IrfPaths::Band> IrfPaths::bands() const {
  std::vector<Band> out;
  if (paths.empty()) return out;
  const std::size_t horizon = paths.front().size();
  std::vector<double> column(paths.size());
  for (std::size_t t = 0; t < horizon; ++t) {
    double sum = 0.0;
    for (std::size_t k = 0; k < paths.size(); ++k) {
      column[k] = paths[k][t];
      sum += column[k];
    }
    out.push_back({t + 1, sum / static_cast<double>(paths.size()), quantile(column, 0.10), quantile(column, 0.90)});
  }
  return out;
}

// --- comparative statics -----------------------------------------------------

const std::vector<std::string>& sweep_studies() {
  static const std::vector<std::string> studies{"delta",  "lambda_via_a", "lambda_via_b",     "ab_fixed_lambda",
                                                "sigma2", "theta0",       "sigma2_thresholds"};
  return studies;
}

namespace {

struct Curve {
  std::string parameter;
  double value;
  MeanFieldParams mf;
  double delta;
  std::optional<double> theta0;  // empty: stationary fitness
};

void emit_curve(const std::string& study, const Curve& c, const SweepConfig& cfg, std::vector<SweepRow>& rows) {
  SweepRow proto;
  proto.study = study;
  proto.parameter = c.parameter;
  proto.value = c.value;
  proto.mu = c.mf.mu;
  proto.a = c.mf.a;
  proto.b = c.mf.b;
  proto.sigma2 = c.mf.sigma2;
  proto.delta = c.delta;
  if (!c.mf.is_stationary()) {
    proto.skipped = true;
    proto.theta0 = c.theta0.value_or(std::nan(""));
    rows.push_back(proto);
    return;
  }
  proto.theta0 = c.theta0.value_or(c.mf.stationary_fitness());
  for (std::size_t t = 1; t <= cfg.horizon; ++t) {
    SweepRow r = proto;
    r.t = t;
    r.irf = irf_density_meanfield(c.mf, proto.theta0, c.delta, t, cfg.exact_integral);
    rows.push_back(r);
  }
}

double irf1_sigma2_slope(const SweepConfig& cfg, double mu) {
  MeanFieldParams mf = cfg.baseline;
  mf.mu = mu;
  const double theta0 = mf.stationary_fitness();
  const double h = 1e-4 * mf.sigma2;
  MeanFieldParams up = mf, down = mf;
  up.sigma2 += h;
  down.sigma2 -= h;
  return (irf_density_meanfield(up, theta0, cfg.delta, 1, cfg.exact_integral) -
          irf_density_meanfield(down, theta0, cfg.delta, 1, cfg.exact_integral)) /
         (2.0 * h);
}

std::vector<double> mu_grid(const SweepConfig& cfg) {
  if (!(cfg.threshold_mu_step > 0.0) || cfg.threshold_mu_max < cfg.threshold_mu_min)
    throw DomainError("invalid threshold mu grid");
  std::vector<double> grid;
  const auto steps = static_cast<long>(std::floor((cfg.threshold_mu_max - cfg.threshold_mu_min) / cfg.threshold_mu_step + 1e-9));
  for (long k = 0; k <= steps; ++k) grid.push_back(cfg.threshold_mu_min + static_cast<double>(k) * cfg.threshold_mu_step);
  return grid;
}

}  // namespace

std::vector<SweepRow> comparative_statics(const SweepConfig& cfg, const std::string& study) {
  cfg.baseline.validate();
  std::vector<SweepRow> rows;
  std::vector<Curve> curves;
  const MeanFieldParams base = cfg.baseline;
  for (double mu : cfg.mus) {
    MeanFieldParams m = base;
    m.mu = mu;
    if (study == "delta") {
      for (double d : cfg.deltas) curves.push_back({"delta", d, m, d, {}});
    } else if (study == "lambda_via_a") {
      for (double a : cfg.a_values) {
        MeanFieldParams v = m;
        v.a = a;
        curves.push_back({"a", a, v, cfg.delta, {}});
      }
    } else if (study == "lambda_via_b") {
      for (double b : cfg.b_values) {
        MeanFieldParams v = m;
        v.b = b;
        curves.push_back({"b", b, v, cfg.delta, {}});
      }
    } else if (study == "ab_fixed_lambda") {
      for (const auto& [a, b] : cfg.ab_pairs) {
        MeanFieldParams v = m;
        v.a = a;
        v.b = b;
        curves.push_back({"a", a, v, cfg.delta, {}});
      }
    } else if (study == "sigma2") {
      for (double s2 : cfg.sigma2_values) {
        MeanFieldParams v = m;
        v.sigma2 = s2;
        curves.push_back({"sigma2", s2, v, cfg.delta, {}});
      }
    } else if (study == "theta0") {
      for (double th : cfg.theta0_values) curves.push_back({"theta0", th, m, cfg.delta, th});
    } else if (study != "sigma2_thresholds") {
      throw DomainError("unknown study '" + study + "'");
    }
  }
  for (const auto& c : curves) emit_curve(study, c, cfg, rows);

  if (study == "sigma2_thresholds") {
    // IRF(1) as a function of mu for each noise level.
    for (double s2 : cfg.sigma2_values) {
      for (double mu : mu_grid(cfg)) {
        MeanFieldParams v = base;
        v.mu = mu;
        v.sigma2 = s2;
        Curve c{"mu", mu, v, cfg.delta, {}};
        SweepConfig one = cfg;
        one.horizon = 1;
        emit_curve(study, c, one, rows);
      }
    }
  }
  return rows;
}

Sigma2Thresholds locate_sigma2_thresholds(const SweepConfig& cfg) {
  cfg.baseline.validate();
  if (!cfg.baseline.is_stationary()) throw StationarityError("threshold search needs a stationary baseline");
  Sigma2Thresholds out;
  const auto grid = mu_grid(cfg);
  constexpr double kFlat = 1e-10;  // slopes this small are treated as no sign information
  double prev_mu = 0.0;
  double prev_d = 0.0;
  bool have_prev = false;
  for (double mu : grid) {
    const double d = irf1_sigma2_slope(cfg, mu);
    if (std::abs(d) < kFlat) continue;
    if (have_prev && (d > 0) != (prev_d > 0)) {
      double lo = prev_mu, hi = mu, dlo = prev_d;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double dm = irf1_sigma2_slope(cfg, mid);
        if ((dm > 0) == (dlo > 0)) {
          lo = mid;
          dlo = dm;
        } else {
          hi = mid;
        }
      }
      out.all_roots.push_back(0.5 * (lo + hi));
    }
    prev_mu = mu;
    prev_d = d;
    have_prev = true;
  }
  for (double r : out.all_roots) {
    if (r < 0.0 && (!out.lower || r > *out.lower)) out.lower = r;
    if (r > 0.0 && (!out.upper || r < *out.upper)) out.upper = r;
  }
  return out;
}

}  // namespace tnirf
