#include "tnirf/estimation.hpp"

#include "tnirf/errors.hpp"

#include <cmath>
#include <sstream>

namespace tnirf {

namespace {

bool masked(const ObservationMask& mask, std::size_t t, std::size_t k) {
  return !mask.empty() && mask[t][k];
}

bool any_masked(const ObservationMask& mask, std::size_t t) {
  if (mask.empty()) return false;
  for (bool m : mask[t])
    if (m) return true;
  return false;
}

void check_series(const FitnessSeries& s, const ObservationMask& mask) {
  if (s.size() < 3) throw DomainError("N-SSI needs at least 3 time points, got " + std::to_string(s.size()));
  s.validate();
  if (!mask.empty()) {
    if (mask.size() != s.size()) throw DimensionError("observation mask length differs from the series");
    for (const auto& row : mask)
      if (row.size() != s.states.front().dim()) throw DimensionError("observation mask width differs from the series");
  }
}

// Throws when X lacks full column rank, naming the offending columns.
void require_full_rank(const Matrix& X, const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(1e-10);
  if (X.rows() >= X.cols() && qr.rank() == X.cols()) return;
  std::ostringstream msg;
  msg << "singular regression design (rank " << qr.rank() << " of " << X.cols() << ")";
  if (X.rows() < X.cols()) msg << ", only " << X.rows() << " usable rows";
  msg << "; dependent regressors:";
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) msg << ' ' << names[static_cast<std::size_t>(perm[k])];
  throw NumericalError(msg.str());
}

std::string coordinate_name(std::size_t k, std::size_t dim, bool directed) {
  if (!directed) return "theta[" + std::to_string(k) + "]";
  const std::size_t n = dim / 2;
  return k < n ? "theta_in[" + std::to_string(k) + "]" : "theta_out[" + std::to_string(k - n) + "]";
}

}  // namespace

NssiFull nssi_fit_full(const FitnessSeries& series, const ObservationMask& mask) {
  check_series(series, mask);
  const std::size_t T = series.size();
  const std::size_t d = series.states.front().dim();
  const bool directed = series.states.front().is_directed();
  const auto D = static_cast<Eigen::Index>(d);
  const Matrix Y = series.as_matrix();

  std::vector<std::string> names{"intercept"};
  for (std::size_t k = 0; k < d; ++k) names.push_back("lag " + coordinate_name(k, d, directed));

  std::vector<std::size_t> lag_ok;
  for (std::size_t t = 1; t < T; ++t)
    if (!any_masked(mask, t - 1)) lag_ok.push_back(t);

  // Directed MLE output is recentred so that sum(in) = sum(out); the lags then
  // have no component along g = (1,..,1,-1,..,-1) and B g is not identified.
  // Regress on the orthogonal complement of g and report B with B g = 0.
  Matrix Z = Matrix::Identity(D, D);
  if (directed) {
    Vector g(D);
    g.head(D / 2).setOnes();
    g.tail(D / 2).setConstant(-1.0);
    g.normalize();
    bool gauged = !lag_ok.empty();
    for (auto t : lag_ok)
      if (std::abs(Y.row(static_cast<Eigen::Index>(t - 1)).dot(g)) > 1e-8 * (1.0 + Y.row(static_cast<Eigen::Index>(t - 1)).norm()))
        gauged = false;
    if (gauged) {
      const Matrix Q = Eigen::HouseholderQR<Matrix>(Matrix(g)).householderQ() * Matrix::Identity(D, D);
      Z = Q.rightCols(D - 1);
      names.assign(1, "intercept");
      for (Eigen::Index k = 1; k < D; ++k) names.push_back("lag direction " + std::to_string(k));
    }
  }
  const Eigen::Index M = Z.cols();

  NssiFull out;
  out.params.mu = Vector::Zero(D);
  out.params.B = Matrix::Zero(D, D);
  out.coef_std_error = Matrix::Zero(D, D + 1);
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<std::size_t> rows;
    for (auto t : lag_ok)
      if (!masked(mask, t, k)) rows.push_back(t);
    Matrix X(static_cast<Eigen::Index>(rows.size()), M + 1);
    Vector y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto R = static_cast<Eigen::Index>(r);
      X(R, 0) = 1.0;
      X.row(R).tail(M) = Y.row(static_cast<Eigen::Index>(rows[r] - 1)) * Z;
      y[R] = Y(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(k));
    }
    try {
      require_full_rank(X, names);
    } catch (const NumericalError& e) {
      throw NumericalError("equation " + coordinate_name(k, d, directed) + ": " + e.what());
    }
    const Vector beta = X.colPivHouseholderQr().solve(y);
    const Vector resid = y - X * beta;
    const auto dof = static_cast<double>(X.rows() - X.cols());
    const double s2 = dof > 0 ? resid.squaredNorm() / dof : 0.0;
    const Matrix XtXinv = (X.transpose() * X).inverse();
    const auto K = static_cast<Eigen::Index>(k);
    out.params.mu[K] = beta[0];
    out.params.B.row(K) = (Z * beta.tail(M)).transpose();
    out.coef_std_error(K, 0) = std::sqrt(s2 * XtXinv(0, 0));
    const Matrix cov_b = Z * XtXinv.bottomRightCorner(M, M) * Z.transpose();
    out.coef_std_error.row(K).tail(D) = (s2 * cov_b.diagonal()).cwiseSqrt().transpose();
  }

  // Residual covariance over fully observed transitions.
  Matrix S = Matrix::Zero(D, D);
  std::size_t used = 0;
  for (auto t : lag_ok) {
    if (any_masked(mask, t)) continue;
    const Vector e = Y.row(static_cast<Eigen::Index>(t)).transpose() - out.params.mu -
                     out.params.B * Y.row(static_cast<Eigen::Index>(t - 1)).transpose();
    S += e * e.transpose();
    ++used;
  }
  if (used == 0) throw NumericalError("no fully observed transition to estimate the noise covariance");
  const auto params_per_eq = static_cast<std::size_t>(M) + 1;
  const double denom = used > params_per_eq ? static_cast<double>(used - params_per_eq) : static_cast<double>(used);
  out.params.Sigma = S / denom;
  out.rows_used = used;
  return out;
}

NssiMeanField nssi_fit_meanfield(const FitnessSeries& series, const ObservationMask& mask) {
  check_series(series, mask);
  if (series.states.front().is_directed())
    throw ValidationError("mean-field N-SSI is defined for undirected series only");
  const std::size_t T = series.size();
  const std::size_t n = series.states.front().dim();
  if (n < 2) throw DomainError("mean-field N-SSI needs at least two nodes");
  const Matrix Y = series.as_matrix();

  std::vector<Eigen::Vector3d> xs;
  std::vector<double> ys;
  for (std::size_t t = 1; t < T; ++t) {
    if (any_masked(mask, t - 1)) continue;
    const auto prev = Y.row(static_cast<Eigen::Index>(t - 1));
    const double total = prev.sum();
    for (std::size_t i = 0; i < n; ++i) {
      if (masked(mask, t, i)) continue;
      const double own = prev[static_cast<Eigen::Index>(i)];
      xs.emplace_back(1.0, own, total - own);
      ys.push_back(Y(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)));
    }
  }
  Matrix X(static_cast<Eigen::Index>(xs.size()), 3);
  Vector y(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t r = 0; r < xs.size(); ++r) {
    X.row(static_cast<Eigen::Index>(r)) = xs[r].transpose();
    y[static_cast<Eigen::Index>(r)] = ys[r];
  }
  require_full_rank(X, {"intercept", "own lag", "sum of other lags"});
  const Vector beta = X.colPivHouseholderQr().solve(y);
  const Vector resid = y - X * beta;
  const auto dof = static_cast<double>(X.rows() - 3);
  const double s2 = dof > 0 ? resid.squaredNorm() / dof : 0.0;
  const Matrix cov = s2 * (X.transpose() * X).inverse();

  NssiMeanField out;
  out.params = MeanFieldParams{beta[1], beta[2], beta[0], s2, n, 1.0};
  out.se_mu = std::sqrt(cov(0, 0));
  out.se_a = std::sqrt(cov(1, 1));
  out.se_b = std::sqrt(cov(2, 2));
  out.rows_used = xs.size();
  return out;
}

}  // namespace tnirf
