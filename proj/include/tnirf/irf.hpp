#pragma once

#include "tnirf/core.hpp"
#include "tnirf/sampling.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace tnirf {

/// B^t delta.
Vector irf_theta(const Matrix& B, const Vector& delta, std::size_t t);
/// Mean-field version using the closed-form power of B.
Vector irf_theta(const MeanFieldParams& mf, const Vector& delta, std::size_t t);

/// Closed-form density IRF of the undirected mean-field model when node 0 is
/// shocked by `delta` and every node sits at theta0 at the shock time:
///   (2/n) I(mu1 + muz, v) + ((n-2)/n) I(2 muz, v) - I(2 mu_t, v),
/// v = 2 sigma_t^2 (1 + rho_t). Requires t >= 1 and stationarity.
double irf_density_meanfield(const MeanFieldParams& mf, double theta0, double delta, std::size_t t,
                             bool exact_integral);

struct IrfPoint {
  std::size_t t = 0;
  double value = 0.0;
  double std_error = 0.0;
};

struct IrfSeries {
  std::string metric;
  std::vector<IrfPoint> points;
};

/// Monte Carlo IRF of a metric: for t = 1..horizon the difference between
/// E[f(A_t)] under N(mu_t + B^t delta, Sigma_t) and under N(mu_t, Sigma_t).
/// Both branches share every random number (common random numbers), so a
/// zero shock gives exactly zero.
IrfSeries irf_metric_mc(const VarParams& params, const FitnessState& theta_tau, const ShockSpec& shock,
                        const Metric& metric, std::size_t horizon, const McOptions& options);

/// Replicate IRF paths: each replicate simulates one noise trajectory and
/// records f(shocked path) - f(baseline path) at t = 1..horizon.
struct IrfPaths {
  std::vector<std::vector<double>> paths;  // [replicate][t - 1]

  struct Band {
    std::size_t t;
    double mean;
    double p10;
    double p90;
  };
  std::vector<Band> bands() const;
};
IrfPaths irf_paths_mc(const VarParams& params, const FitnessState& theta_tau, const ShockSpec& shock,
                      const Metric& metric, std::size_t horizon, const McOptions& options);

/// Linear-interpolated quantile (q in [0, 1]) of an unsorted sample.
double quantile(std::vector<double> values, double q);

// --- comparative statics -----------------------------------------------------

/// Parameter grids of the comparative-statics studies around the baseline.
struct SweepConfig {
  int version = 1;
  MeanFieldParams baseline{0.3, 0.01, 0.0, 0.1, 50, 1.0};
  std::vector<double> mus{-0.3, 0.0, 0.3};
  double delta = -10.0;
  std::size_t horizon = 20;
  bool exact_integral = false;
  std::vector<double> deltas{-20.0, -10.0, 10.0};
  std::vector<double> a_values{0.2, 0.3, 0.4};
  std::vector<double> b_values{7.9592e-3, 0.01, 1.2041e-2};
  std::vector<std::array<double, 2>> ab_pairs{{0.05, 1.5102e-2}, {0.3, 0.01}, {0.75, 8.1633e-4}};
  std::vector<double> sigma2_values{0.01, 0.1, 0.5};
  std::vector<double> theta0_values{-0.75, 0.0, 0.75};
  double threshold_mu_min = -1.5;
  double threshold_mu_max = 1.5;
  double threshold_mu_step = 0.01;
};

struct SweepRow {
  std::string study;
  std::string parameter;  // varied parameter name ("mu" for sigma2_thresholds)
  double value = 0.0;     // varied parameter value
  double mu = 0.0;
  double a = 0.0;
  double b = 0.0;
  double sigma2 = 0.0;
  double theta0 = 0.0;
  double delta = 0.0;
  std::size_t t = 0;
  double irf = 0.0;
  bool skipped = false;   // non-stationary grid point
};

const std::vector<std::string>& sweep_studies();

/// Long-format figure data for one study. Non-stationary points produce a
/// single skipped row per curve instead of an error.
std::vector<SweepRow> comparative_statics(const SweepConfig& config, const std::string& study);

/// mu values where d IRF(1) / d sigma2 changes sign around mu = 0 (at the
/// baseline sigma2). Empty optionals when no sign change is found.
struct Sigma2Thresholds {
  std::optional<double> lower;
  std::optional<double> upper;
  std::vector<double> all_roots;
};
Sigma2Thresholds locate_sigma2_thresholds(const SweepConfig& config);

}  // namespace tnirf
