#include "tnirf/var_dynamics.hpp"

#include "tnirf/errors.hpp"

#include <cmath>

namespace tnirf {

FitnessSeries simulate_var(const VarParams& params, const FitnessState& theta0, std::size_t T,
                           std::uint64_t seed) {
  Rng rng = make_stream(seed);
  return simulate_var(params, theta0, T, rng);
}

FitnessSeries simulate_var(const VarParams& params, const FitnessState& theta0, std::size_t T, Rng& rng) {
  params.validate();
  if (theta0.dim() != params.dim())
    throw DimensionError("theta0 has dimension " + std::to_string(theta0.dim()) + ", VAR has " +
                         std::to_string(params.dim()));
  const Matrix root = psd_sqrt(params.Sigma);
  const auto d = static_cast<Eigen::Index>(params.dim());
  std::normal_distribution<double> normal;
  FitnessSeries series;
  series.states.reserve(T);
  Vector theta = theta0.values();
  Vector z(d);
  for (std::size_t t = 0; t < T; ++t) {
    for (Eigen::Index k = 0; k < d; ++k) z[k] = normal(rng);
    theta = params.mu + params.B * theta + root * z;
    series.states.emplace_back(theta, theta0.is_directed());
  }
  return series;
}

GaussianMoments conditional_moments(const VarParams& params, const Vector& theta_tau, std::size_t h) {
  params.validate();
  if (static_cast<std::size_t>(theta_tau.size()) != params.dim())
    throw DimensionError("theta_tau dimension does not match the VAR");
  const auto d = theta_tau.size();
  GaussianMoments m{theta_tau, Matrix::Zero(d, d)};
  // mean_{k+1} = mu + B mean_k and cov_{k+1} = B cov_k B^T + Sigma unroll to
  // the two sums.
  for (std::size_t k = 0; k < h; ++k) {
    m.mean = params.mu + params.B * m.mean;
    m.cov = params.B * m.cov * params.B.transpose() + params.Sigma;
  }
  m.cov = 0.5 * (m.cov + m.cov.transpose());
  return m;
}

double geometric_sum(double x, std::size_t t) noexcept {
  if (std::abs(1.0 - x) < 1e-12) return static_cast<double>(t);
  return (1.0 - std::pow(x, static_cast<double>(t))) / (1.0 - x);
}

Matrix meanfield_matrix_power(const MeanFieldParams& mf, std::size_t t) {
  mf.validate();
  const double c = std::pow(mf.contrast_eigenvalue(), static_cast<double>(t));
  const double l = std::pow(mf.lambda1(), static_cast<double>(t));
  const auto n = static_cast<Eigen::Index>(mf.n);
  Matrix P = Matrix::Constant(n, n, (l - c) / static_cast<double>(mf.n));
  P.diagonal().array() += c;
  return P;
}

MeanFieldMoments meanfield_conditional_moments(const MeanFieldParams& mf, double theta0, std::size_t t) {
  mf.validate();
  const double n = static_cast<double>(mf.n);
  const double c = mf.contrast_eigenvalue();
  const double l = mf.lambda1();
  MeanFieldMoments out;
  // mu 1 is an eigenvector of B, so sum_{k<t} B^k mu 1 = mu G(lambda1) 1.
  out.mean = mf.mu * geometric_sum(l, t) + std::pow(l, static_cast<double>(t)) * theta0;
  const double g_contrast = geometric_sum(c * c, t);
  const double g_lambda = geometric_sum(l * l, t);
  out.variance = mf.sigma2 * (g_contrast + (g_lambda - g_contrast) / n);
  out.covariance = mf.sigma2 * (g_lambda - g_contrast) / n;
  out.correlation = out.variance > 0.0 ? out.covariance / out.variance : 0.0;
  return out;
}

ShockedMeans shocked_means(const MeanFieldParams& mf, double theta0, double delta, std::size_t t) {
  mf.validate();
  const double n = static_cast<double>(mf.n);
  const double ct = std::pow(mf.contrast_eigenvalue(), static_cast<double>(t));
  const double lt = std::pow(mf.lambda1(), static_cast<double>(t));
  ShockedMeans out;
  out.others = mf.mu * geometric_sum(mf.lambda1(), t) + theta0 * ct + (n * theta0 + delta) * (lt - ct) / n;
  out.shocked = out.others + delta * ct;
  return out;
}

MeanFieldParams sparse_expected_meanfield(const MeanFieldParams& mf) {
  mf.validate();
  MeanFieldParams out = mf;
  out.b = mf.b * mf.p;
  out.p = 1.0;
  return out;
}

Matrix sample_sparse_meanfield_matrix(const MeanFieldParams& mf, Rng& rng) {
  mf.validate();
  std::bernoulli_distribution keep(mf.p);
  Matrix B = Matrix::Zero(static_cast<Eigen::Index>(mf.n), static_cast<Eigen::Index>(mf.n));
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    for (Eigen::Index j = 0; j < B.cols(); ++j) B(i, j) = i == j ? mf.a : (keep(rng) ? mf.b : 0.0);
  return B;
}

}  // namespace tnirf
