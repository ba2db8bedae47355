#include "tnirf/estimation.hpp"

#include "tnirf/errors.hpp"

#include <cmath>
#include <numbers>

namespace tnirf {

void StateSpaceParams::validate() const {
  latent.validate();
  const auto d = static_cast<Eigen::Index>(latent.dim());
  if (gamma.size() != d) throw DimensionError("gamma has wrong length");
  if (obs_noise.size() != d) throw DimensionError("observation noise has wrong length");
  if (!gamma.allFinite() || !obs_noise.allFinite()) throw ValidationError("state-space params contain non-finite entries");
  if (!(obs_noise.minCoeff() > 0.0)) throw ValidationError("observation noise variances must be > 0");
}

KalmanResult kalman_filter(const StateSpaceParams& ssp, const FitnessSeries& obs, const ObservationMask& mask) {
  ssp.validate();
  return kalman_filter(ssp, {stationary_mean(ssp.latent), stationary_covariance(ssp.latent)}, obs, mask);
}

KalmanResult kalman_filter(const StateSpaceParams& ssp, const GaussianMoments& initial, const FitnessSeries& obs,
                           const ObservationMask& mask) {
  ssp.validate();
  obs.validate();
  const auto d = static_cast<Eigen::Index>(ssp.dim());
  if (!obs.states.empty() && obs.states.front().dim() != ssp.dim())
    throw DimensionError("observations have dimension " + std::to_string(obs.states.front().dim()) + ", expected " +
                         std::to_string(ssp.dim()));
  if (!mask.empty() && mask.size() != obs.size()) throw DimensionError("observation mask length differs from the series");

  KalmanResult out;
  if (initial.mean.size() != d || initial.cov.rows() != d || initial.cov.cols() != d)
    throw DimensionError("initial moments do not match the state dimension");
  Vector m = initial.mean;
  Matrix P = initial.cov;
  const Matrix& B = ssp.latent.B;
  const double log2pi = std::log(2.0 * std::numbers::pi);

  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (t > 0) {
      m = ssp.latent.mu + B * m;
      P = B * P * B.transpose() + ssp.latent.Sigma;
      P = 0.5 * (P + P.transpose());
    }
    out.predicted.push_back({m, P});

    std::vector<Eigen::Index> seen;
    for (Eigen::Index k = 0; k < d; ++k)
      if (mask.empty() || !mask[t][static_cast<std::size_t>(k)]) seen.push_back(k);
    if (!seen.empty()) {
      const auto q = static_cast<Eigen::Index>(seen.size());
      const Vector& y = obs.states[t].values();
      Vector v(q);
      Matrix S(q, q);
      Matrix PHt(d, q);
      for (Eigen::Index r = 0; r < q; ++r) {
        v[r] = y[seen[r]] - ssp.gamma[seen[r]] - m[seen[r]];
        PHt.col(r) = P.col(seen[r]);
        for (Eigen::Index c = 0; c < q; ++c) S(r, c) = P(seen[r], seen[c]);
        S(r, r) += ssp.obs_noise[seen[r]];
      }
      Eigen::LLT<Matrix> llt(S);
      if (llt.info() != Eigen::Success)
        throw NumericalError("innovation covariance not positive definite at t=" + std::to_string(obs.time(t)));
      const Matrix K = llt.solve(PHt.transpose()).transpose();  // P H' S^{-1}
      const Vector Sinv_v = llt.solve(v);
      const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      out.loglik += -0.5 * (logdet + v.dot(Sinv_v) + static_cast<double>(q) * log2pi);

      // Joseph form: (I - KH) P (I - KH)' + K R K'.
      Matrix IKH = Matrix::Identity(d, d);
      for (Eigen::Index r = 0; r < q; ++r) IKH.col(seen[r]) -= K.col(r);
      Matrix KR = K;
      for (Eigen::Index r = 0; r < q; ++r) KR.col(r) *= ssp.obs_noise[seen[r]];
      m = m + K * v;
      P = IKH * P * IKH.transpose() + KR * K.transpose();
      P = 0.5 * (P + P.transpose());
    }
    out.filtered.push_back({m, P});
  }
  return out;
}

SmootherResult rts_smoother(const StateSpaceParams& ssp, const KalmanResult& f) {
  const std::size_t T = f.filtered.size();
  SmootherResult out;
  out.smoothed.resize(T);
  out.lag_cov.resize(T);
  if (T == 0) return out;
  const Matrix& B = ssp.latent.B;
  out.smoothed[T - 1] = f.filtered[T - 1];
  for (std::size_t k = T - 1; k-- > 0;) {
    const Matrix& Pf = f.filtered[k].cov;
    const Matrix& Pp = f.predicted[k + 1].cov;
    // J = Pf B' Pp^{-1}
    const Matrix J = Pp.ldlt().solve(B * Pf).transpose();
    const auto& next = out.smoothed[k + 1];
    Vector mean = f.filtered[k].mean + J * (next.mean - f.predicted[k + 1].mean);
    Matrix cov = Pf + J * (next.cov - Pp) * J.transpose();
    cov = 0.5 * (cov + cov.transpose());
    out.smoothed[k] = {mean, cov};
    out.lag_cov[k + 1] = next.cov * J.transpose();
  }
  return out;
}

}  // namespace tnirf
