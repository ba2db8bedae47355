#include "tnirf/estimation.hpp"

#include "nelder_mead.hpp"
#include "tnirf/errors.hpp"
#include "tnirf/log.hpp"
#include "tnirf/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace tnirf {

namespace {

constexpr double kMaxRadius = 0.999;
constexpr double kRejected = 1e300;

GaussianMoments meanfield_stationary_law(const MeanFieldParams& mf) {
  const auto n = static_cast<Eigen::Index>(mf.n);
  const double c = mf.contrast_eigenvalue();
  const double l = mf.lambda1();
  const double vc = mf.sigma2 / (1.0 - c * c);
  const double vl = mf.sigma2 / (1.0 - l * l);
  Matrix P = Matrix::Constant(n, n, (vl - vc) / static_cast<double>(n));
  P.diagonal().array() += vc;
  return {Vector::Constant(n, mf.mu / (1.0 - l)), P};
}

FitnessSeries filtered_series(const KalmanResult& kr, const FitnessSeries& obs) {
  FitnessSeries out;
  const bool directed = obs.states.front().is_directed();
  for (const auto& f : kr.filtered) out.states.emplace_back(f.mean, directed);
  out.times = obs.times;
  return out;
}

struct MeanFieldLayout {
  bool fit_r;
  bool fit_gamma;
  double fixed_r;
  std::size_t n;

  Eigen::Index size() const { return 4 + (fit_r ? 1 : 0) + (fit_gamma ? 1 : 0); }

  Eigen::VectorXd pack(const MeanFieldParams& mf, double r, double gamma) const {
    Eigen::VectorXd x(size());
    x[0] = mf.a;
    x[1] = mf.b;
    x[2] = mf.mu;
    x[3] = std::log(mf.sigma2);
    Eigen::Index k = 4;
    if (fit_r) x[k++] = std::log(r);
    if (fit_gamma) x[k++] = gamma;
    return x;
  }

  void unpack(const Eigen::VectorXd& x, MeanFieldParams& mf, double& r, double& gamma) const {
    mf = MeanFieldParams{x[0], x[1], x[2], std::exp(x[3]), n, 1.0};
    Eigen::Index k = 4;
    r = fit_r ? std::exp(x[k++]) : fixed_r;
    gamma = fit_gamma ? x[k++] : 0.0;
  }
};

double meanfield_negloglik(const MeanFieldLayout& layout, const Eigen::VectorXd& x, const FitnessSeries& obs,
                           const ObservationMask& mask) {
  if (!x.allFinite()) return kRejected;
  MeanFieldParams mf;
  double r = 0.0, gamma = 0.0;
  layout.unpack(x, mf, r, gamma);
  if (std::abs(mf.lambda1()) >= kMaxRadius || std::abs(mf.contrast_eigenvalue()) >= kMaxRadius) return kRejected;
  if (!(mf.sigma2 > 1e-12) || !(r > 1e-14) || !std::isfinite(mf.sigma2) || !std::isfinite(r)) return kRejected;
  try {
    const auto ssp = meanfield_state_space(mf, gamma, r);
    const double ll = kalman_filter(ssp, meanfield_stationary_law(mf), obs, mask).loglik;
    return std::isfinite(ll) ? -ll : kRejected;
  } catch (const NumericalError&) {
    return kRejected;
  }
}

KfssiResult fit_meanfield(const FitnessSeries& obs, const ObservationMask& mask, const KfssiOptions& opt) {
  if (obs.states.front().is_directed())
    throw ValidationError("mean-field KF-SSI is defined for undirected series only");
  const std::size_t n = obs.states.front().dim();
  const NssiMeanField start = nssi_fit_meanfield(obs, mask);

  MeanFieldLayout layout{!opt.fixed_obs_noise.has_value(), opt.free_gamma, opt.fixed_obs_noise.value_or(0.0), n};
  if (opt.fixed_obs_noise && !(*opt.fixed_obs_noise > 0.0)) throw DomainError("fixed observation noise must be > 0");

  MeanFieldParams mf0 = start.params;
  for (int k = 0; k < 60 && (std::abs(mf0.lambda1()) >= 0.95 || std::abs(mf0.contrast_eigenvalue()) >= 0.95); ++k) {
    mf0.a *= 0.9;
    mf0.b *= 0.9;
  }
  const double total_var = std::max(start.params.sigma2, 1e-8);
  double r0 = 0.5 * total_var;
  if (opt.fixed_obs_noise) {
    r0 = *opt.fixed_obs_noise;
    mf0.sigma2 = std::max(total_var - r0, 0.5 * total_var);
  } else {
    mf0.sigma2 = 0.5 * total_var;
  }

  const auto objective = [&](const Eigen::VectorXd& x) { return meanfield_negloglik(layout, x, obs, mask); };
  const Eigen::VectorXd x0 = layout.pack(mf0, r0, 0.0);
  Eigen::VectorXd step(layout.size());
  step[0] = 0.1;
  step[1] = 0.1 / static_cast<double>(n - 1);
  step[2] = 0.1;
  step[3] = 0.5;
  for (Eigen::Index k = 4; k < step.size(); ++k) step[k] = 0.5;

  const double initial = objective(x0);
  detail::NelderMeadResult best{x0, initial, 0};
  std::size_t evaluations = 0;
  for (std::size_t s = 0; s <= opt.restarts; ++s) {
    Eigen::VectorXd xs = x0;
    if (s > 0) {
      Rng rng = make_stream(opt.seed, {s});
      std::normal_distribution<double> z;
      for (Eigen::Index k = 0; k < xs.size(); ++k) xs[k] += step[k] * 2.0 * z(rng);
      if (objective(xs) >= kRejected) xs = x0;
    }
    auto res = detail::nelder_mead(objective, xs, step, 1e-8, opt.max_evaluations);
    // One restart from the converged point guards against simplex collapse.
    auto again = detail::nelder_mead(objective, res.x, 0.1 * step, 1e-8, opt.max_evaluations);
    evaluations += res.evaluations + again.evaluations;
    if (again.value < res.value) res = again;
    if (res.value < best.value) best = res;
  }
  if (best.value >= kRejected) throw NumericalError("KF-SSI found no admissible parameter point");

  KfssiResult out;
  MeanFieldParams mf;
  double r = 0.0, gamma = 0.0;
  layout.unpack(best.x, mf, r, gamma);
  if (std::max(std::abs(mf.lambda1()), std::abs(mf.contrast_eigenvalue())) > kMaxRadius - 1e-4) {
    out.projected = true;
    warn("KF-SSI estimate lies on the stationarity boundary (spectral radius " +
         std::to_string(std::max(std::abs(mf.lambda1()), std::abs(mf.contrast_eigenvalue()))) + ")");
  }
  out.params = meanfield_state_space(mf, gamma, r);
  out.meanfield = mf;
  const KalmanResult kr = kalman_filter(out.params, meanfield_stationary_law(mf), obs, mask);
  out.filtered = filtered_series(kr, obs);
  out.loglik = kr.loglik;
  out.initial_loglik = initial >= kRejected ? -std::numeric_limits<double>::infinity() : -initial;
  out.iterations = evaluations;
  return out;
}

// Silent variant for the EM loop; fit_full reports once at the end.
bool project_radius(Matrix& B) {
  const double rho = spectral_radius(B);
  if (rho < kMaxRadius) return false;
  B *= kMaxRadius / rho * (1.0 - 1e-9);
  return true;
}

KfssiResult fit_full(const FitnessSeries& obs, const ObservationMask& mask, const KfssiOptions& opt) {
  const std::size_t T = obs.size();
  const auto d = static_cast<Eigen::Index>(obs.states.front().dim());
  const auto observed = [&](std::size_t t, Eigen::Index k) {
    return mask.empty() || !mask[t][static_cast<std::size_t>(k)];
  };

  KfssiResult out;
  StateSpaceParams ssp;
  ssp.gamma = Vector::Zero(d);
  {
    NssiFull start = nssi_fit_full(obs, mask);
    ssp.latent = start.params;
    if (spectral_radius(ssp.latent.B) >= 0.95) ssp.latent.B *= 0.95 / spectral_radius(ssp.latent.B);
    Matrix S = 0.5 * (start.params.Sigma + start.params.Sigma.transpose());
    ssp.obs_noise = (0.5 * S.diagonal()).cwiseMax(1e-6);
    ssp.latent.Sigma = 0.5 * S + 1e-6 * Matrix::Identity(d, d);
  }

  double prev = -std::numeric_limits<double>::infinity();
  bool first = true;
  std::size_t it = 0;
  for (; it < opt.em_max_iterations; ++it) {
    const KalmanResult kr = kalman_filter(ssp, obs, mask);
    if (first) {
      out.initial_loglik = kr.loglik;
      first = false;
    }
    if (std::abs(kr.loglik - prev) < opt.em_tolerance) break;
    prev = kr.loglik;
    const SmootherResult sm = rts_smoother(ssp, kr);

    // gamma: mean of Theta_t minus the smoothed latent mean, the conditional
    // M-step given the smoothed moments.
    Vector gsum = Vector::Zero(d), gcnt = Vector::Zero(d);
    for (std::size_t t = 0; t < T; ++t)
      for (Eigen::Index k = 0; k < d; ++k)
        if (observed(t, k)) {
          gsum[k] += obs.states[t].values()[k] - sm.smoothed[t].mean[k];
          gcnt[k] += 1.0;
        }
    for (Eigen::Index k = 0; k < d; ++k)
      if (gcnt[k] > 0) ssp.gamma[k] = gsum[k] / gcnt[k];

    // Latent regression on smoothed moments, x = (1, theta).
    Matrix S11 = Matrix::Zero(d + 1, d + 1), S10 = Matrix::Zero(d, d + 1), S00 = Matrix::Zero(d, d);
    for (std::size_t t = 1; t < T; ++t) {
      const auto& prevm = sm.smoothed[t - 1];
      const auto& cur = sm.smoothed[t];
      S11(0, 0) += 1.0;
      S11.block(1, 0, d, 1) += prevm.mean;
      S11.block(0, 1, 1, d) += prevm.mean.transpose();
      S11.block(1, 1, d, d) += prevm.cov + prevm.mean * prevm.mean.transpose();
      S10.col(0) += cur.mean;
      S10.block(0, 1, d, d) += sm.lag_cov[t] + cur.mean * prevm.mean.transpose();
      S00 += cur.cov + cur.mean * cur.mean.transpose();
    }
    Matrix C = S11.ldlt().solve(S10.transpose()).transpose();
    Matrix B = C.block(0, 1, d, d);
    out.projected = project_radius(B);
    if (out.projected) {
      // Refit the intercept for the projected B.
      C.block(0, 1, d, d) = B;
      C.col(0) = (S10.col(0) - B * S11.block(1, 0, d, 1)) / S11(0, 0);
    }
    ssp.latent.mu = C.col(0);
    ssp.latent.B = B;
    // E[sum (theta_t - C x_t)(theta_t - C x_t)^T], PSD for any C.
    Matrix Sig = (S00 - C * S10.transpose() - S10 * C.transpose() + C * S11 * C.transpose()) /
                 static_cast<double>(T - 1);
    Sig = 0.5 * (Sig + Sig.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(Sig);
    Vector ev = es.eigenvalues().cwiseMax(1e-8);
    ssp.latent.Sigma = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    ssp.latent.Sigma = 0.5 * (ssp.latent.Sigma + ssp.latent.Sigma.transpose());

    // Observation noise.
    for (Eigen::Index k = 0; k < d; ++k) {
      double s = 0.0, c = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        if (!observed(t, k)) continue;
        const double e = obs.states[t].values()[k] - ssp.gamma[k] - sm.smoothed[t].mean[k];
        s += e * e + sm.smoothed[t].cov(k, k);
        c += 1.0;
      }
      if (c > 0) ssp.obs_noise[k] = std::max(s / c, 1e-8);
    }
  }
  if (out.projected)
    warn("EM transition matrix held at spectral radius " + std::to_string(kMaxRadius) + " in the final iteration");
  const KalmanResult kr = kalman_filter(ssp, obs, mask);
  out.params = ssp;
  out.filtered = filtered_series(kr, obs);
  out.loglik = kr.loglik;
  out.iterations = it;
  return out;
}

}  // namespace

StateSpaceParams meanfield_state_space(const MeanFieldParams& mf, double gamma, double r) {
  StateSpaceParams ssp;
  ssp.latent = mf.to_var();
  const auto n = static_cast<Eigen::Index>(mf.n);
  ssp.gamma = Vector::Constant(n, gamma);
  ssp.obs_noise = Vector::Constant(n, r);
  return ssp;
}

KfssiResult kfssi_fit(const FitnessSeries& theta_hats, const ObservationMask& mask, const KfssiOptions& options) {
  if (theta_hats.size() < 3) throw DomainError("KF-SSI needs at least 3 time points");
  theta_hats.validate();
  return options.mode == FitMode::meanfield ? fit_meanfield(theta_hats, mask, options)
                                            : fit_full(theta_hats, mask, options);
}

bool project_spectral_radius(Matrix& B, double max_radius) {
  const double rho = spectral_radius(B);
  if (rho < max_radius) return false;
  B *= max_radius / rho * (1.0 - 1e-9);
  warn("transition matrix projected from spectral radius " + std::to_string(rho) + " to " +
       std::to_string(max_radius));
  return true;
}

}  // namespace tnirf
