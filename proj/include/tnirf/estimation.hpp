#pragma once

#include "tnirf/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tnirf {

// --- per-snapshot maximum likelihood ------------------------------------------

inline constexpr double kThetaMax = 20.0;

struct MleOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 5000;
  double damping = 0.5;
  double theta_max = kThetaMax;
};

/// Fitness MLE of one snapshot. `clipped_nodes` lists coordinate indices
/// (directed snapshots use the in/out ordering of FitnessState) whose
/// estimate sits at +-theta_max because no finite solution exists.
struct SnapshotMle {
  FitnessState theta_hat;
  bool converged = false;
  std::vector<std::size_t> clipped_nodes;
  double max_residual = 0.0;
  std::size_t iterations = 0;
};

/// Solves the degree equations sum_j sigmoid(theta_i + theta_j) = d_i
/// (directed: out-degrees against theta_out_i + theta_in_j, in-degrees
/// against the same sums over i) by the damped fixed point
///   theta_i += damping * (log d_i - log E_i).
/// Degree 0 and degree n-1 coordinates are clipped to -/+theta_max up front;
/// coordinates that run past theta_max during the iteration are clipped and
/// frozen. `converged` is set when the unclipped residuals fall below the
/// tolerance and at least one coordinate is unclipped. Directed estimates
/// are recentred so the mean in-fitness equals the mean out-fitness.
SnapshotMle mle_snapshot(const AdjacencySnapshot& A, const MleOptions& options = {});

/// Missing-observation mask: mask[t][k] is true when coordinate k at time t
/// is unobserved. An empty mask means fully observed.
using ObservationMask = std::vector<std::vector<bool>>;

struct MleSeries {
  FitnessSeries theta_hats;
  ObservationMask clipped;
  std::size_t unconverged = 0;
};

/// mle_snapshot on every snapshot; times are the snapshot timestamps.
MleSeries mle_series(const TemporalNetwork& net, const MleOptions& options = {});

// --- N-SSI ---------------------------------------------------------------------

enum class FitMode { full, meanfield };

struct NssiFull {
  VarParams params;
  Matrix coef_std_error;  // row k: (mu_k, B_k.) standard errors
  std::size_t rows_used = 0;
};

struct NssiMeanField {
  MeanFieldParams params;  // p = 1, b is the per-entry coupling
  double se_a = 0.0;
  double se_b = 0.0;
  double se_mu = 0.0;
  std::size_t rows_used = 0;
};

/// Per-equation least squares of theta_t on (1, theta_{t-1}). Pairs with a
/// masked coordinate in theta_{t-1}, or a masked response, are skipped.
/// Sigma is the residual covariance over fully observed pairs.
NssiFull nssi_fit_full(const FitnessSeries& series, const ObservationMask& mask = {});

/// Pooled least squares of theta_{t,i} on (1, theta_{t-1,i},
/// sum_{j != i} theta_{t-1,j}); sigma2 is the residual variance. Undirected
/// series only.
NssiMeanField nssi_fit_meanfield(const FitnessSeries& series, const ObservationMask& mask = {});

// --- Kalman filter ---------------------------------------------------------------

/// Observation model Theta_t = gamma + theta_t + v_t, v_t ~ N(0, diag(obs_noise)).
struct StateSpaceParams {
  Vector gamma;
  Vector obs_noise;
  VarParams latent;

  std::size_t dim() const noexcept { return latent.dim(); }
  void validate() const;
};

struct KalmanResult {
  std::vector<GaussianMoments> predicted;  // theta_t | Theta_{1..t-1}
  std::vector<GaussianMoments> filtered;   // theta_t | Theta_{1..t}
  double loglik = 0.0;
};

/// Predict/update recursion started from the stationary law of the latent
/// VAR. Masked coordinates drop out of the update and the likelihood.
/// Throws NumericalError naming the time index when an innovation
/// covariance is not positive definite.
KalmanResult kalman_filter(const StateSpaceParams& ssp, const FitnessSeries& observations,
                           const ObservationMask& mask = {});
/// Same recursion from an explicit prior for theta_1.
KalmanResult kalman_filter(const StateSpaceParams& ssp, const GaussianMoments& initial,
                           const FitnessSeries& observations, const ObservationMask& mask = {});

struct SmootherResult {
  std::vector<GaussianMoments> smoothed;
  std::vector<Matrix> lag_cov;  // Cov(theta_t, theta_{t-1} | all), t >= 1 (index 0 unused)
};

/// Rauch-Tung-Striebel smoother over a filter run.
SmootherResult rts_smoother(const StateSpaceParams& ssp, const KalmanResult& filter);

// --- KF-SSI ----------------------------------------------------------------------

struct KfssiOptions {
  FitMode mode = FitMode::meanfield;
  /// Mean-field: estimate a scalar gamma jointly. Off by default because
  /// (mu, gamma) are not jointly identified.
  bool free_gamma = false;
  /// Mean-field: hold r at this value instead of estimating it.
  std::optional<double> fixed_obs_noise;
  std::size_t restarts = 5;
  std::uint64_t seed = 0;
  std::size_t max_evaluations = 4000;
  /// Full mode EM.
  double em_tolerance = 1e-6;
  std::size_t em_max_iterations = 500;
};

/// Rescales B onto spectral radius `max_radius` (with a logged warning) when it
/// lies on or outside it. Returns whether B changed.
bool project_spectral_radius(Matrix& B, double max_radius = 0.999);

struct KfssiResult {
  StateSpaceParams params;
  std::optional<MeanFieldParams> meanfield;  // set in mean-field mode
  FitnessSeries filtered;
  double loglik = 0.0;
  double initial_loglik = 0.0;  // at the N-SSI starting point
  std::size_t iterations = 0;
  bool projected = false;  // transition was pulled back to radius 0.999
};

KfssiResult kfssi_fit(const FitnessSeries& theta_hats, const ObservationMask& mask = {},
                      const KfssiOptions& options = {});

/// State-space params of a mean-field latent with scalar gamma and r.
StateSpaceParams meanfield_state_space(const MeanFieldParams& mf, double gamma, double r);

// --- benchmark ------------------------------------------------------------------

struct BenchmarkConfig {
  std::size_t n_sim = 100;
  std::size_t n = 10;
  std::size_t T = 100;
  double a = 0.7;
  double b = 0.07;
  double sigma = 0.2;
  double mu = -0.07;
  /// "row_total": b is the summed off-diagonal coupling of a row, each
  /// entry b / (n - 1). "entry": b is each off-diagonal entry.
  std::string b_convention = "row_total";
  bool free_gamma = false;
  std::size_t restarts = 5;
  int threads = 0;

  MeanFieldParams truth() const;
};

struct MethodErrors {
  double theta = 0.0;      // fitness MAE (absolute)
  double theta_rel = 0.0;  // fitness mean absolute relative error
  double a = 0.0;
  double b = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
};

struct BenchmarkReplicate {
  std::size_t index = 0;
  bool dropped = false;
  MethodErrors nssi;
  MethodErrors kfssi;
  double clipped_fraction = 0.0;
  std::string error;  // why the replicate was dropped
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::uint64_t seed = 0;
  MethodErrors nssi;
  MethodErrors kfssi;
  std::size_t dropped = 0;
  std::vector<BenchmarkReplicate> replicates;

  /// Published full-scale values, columns (theta, a, b, mu, sigma2).
  static MethodErrors reference_nssi();
  static MethodErrors reference_kfssi();
};

BenchmarkReport run_benchmark(const BenchmarkConfig& config, std::uint64_t seed);

}  // namespace tnirf
