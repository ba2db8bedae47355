#include "tnirf/estimation.hpp"

#include "tnirf/errors.hpp"
#include "tnirf/gaussian_logistic.hpp"
#include "tnirf/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace tnirf {

namespace {

constexpr double kNewtonStep = 1e-10;

// Coordinates follow FitnessState: undirected 0..n-1, directed in 0..n-1 and
// out n..2n-1. Expected degree of every coordinate under theta.
Vector expected_degrees(const Vector& theta, std::size_t n, bool directed) {
  Vector e = Vector::Zero(theta.size());
  const auto N = static_cast<Eigen::Index>(n);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      if (i == j) continue;
      if (directed) {
        const double p = sigmoid(theta[N + i] + theta[j]);
        e[N + i] += p;
        e[j] += p;
      } else if (j > i) {
        const double p = sigmoid(theta[i] + theta[j]);
        e[i] += p;
        e[j] += p;
      }
    }
  }
  return e;
}

Matrix degree_jacobian(const Vector& theta, std::size_t n, bool directed) {
  const auto N = static_cast<Eigen::Index>(n);
  Matrix J = Matrix::Zero(theta.size(), theta.size());
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      if (i == j) continue;
      if (directed) {
        const double p = sigmoid(theta[N + i] + theta[j]);
        const double w = p * (1.0 - p);
        J(N + i, N + i) += w;
        J(N + i, j) += w;
        J(j, j) += w;
        J(j, N + i) += w;
      } else {
        const double p = sigmoid(theta[i] + theta[j]);
        const double w = p * (1.0 - p);
        J(i, i) += w;
        J(i, j) += w;
      }
    }
  }
  return J;
}

double max_residual(const Vector& e, const Vector& d, const std::vector<bool>& clipped) {
  double r = 0.0;
  for (Eigen::Index k = 0; k < d.size(); ++k)
    if (!clipped[static_cast<std::size_t>(k)]) r = std::max(r, std::abs(e[k] - d[k]));
  return r;
}

}  // namespace

SnapshotMle mle_snapshot(const AdjacencySnapshot& A, const MleOptions& options) {
  const std::size_t n = A.n();
  const bool directed = A.directed();
  if (n < 2) throw DomainError("mle_snapshot needs at least two nodes");
  const auto dim = static_cast<Eigen::Index>(directed ? 2 * n : n);
  const auto N = static_cast<Eigen::Index>(n);
  const double full = static_cast<double>(n - 1);

  const Degrees deg = degrees(A);
  Vector d(dim);
  for (Eigen::Index i = 0; i < N; ++i) {
    d[i] = static_cast<double>(deg.in[static_cast<std::size_t>(i)]);
    if (directed) d[N + i] = static_cast<double>(deg.out[static_cast<std::size_t>(i)]);
  }

  const double tmax = options.theta_max;
  std::vector<bool> clipped(static_cast<std::size_t>(dim), false);
  Vector theta(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (d[k] <= 0.0) {
      theta[k] = -tmax;
      clipped[static_cast<std::size_t>(k)] = true;
    } else if (d[k] >= full) {
      theta[k] = tmax;
      clipped[static_cast<std::size_t>(k)] = true;
    } else {
      theta[k] = 0.5 * logit(d[k] / full);
    }
  }

  SnapshotMle out;
  const auto any_free = [&] { return std::find(clipped.begin(), clipped.end(), false) != clipped.end(); };
  double res = 0.0;
  std::size_t it = 0;
  for (; it < options.max_iterations && any_free(); ++it) {
    const Vector e = expected_degrees(theta, n, directed);
    res = max_residual(e, d, clipped);
    if (res < options.tolerance) break;
    for (Eigen::Index k = 0; k < dim; ++k) {
      const auto K = static_cast<std::size_t>(k);
      if (clipped[K]) continue;
      theta[k] += options.damping * (std::log(d[k]) - std::log(e[k]));
      if (std::abs(theta[k]) > tmax) {
        theta[k] = std::copysign(tmax, theta[k]);
        clipped[K] = true;
      }
    }
  }

  // Newton polish on the free coordinates: rescues a stalled fixed point and
  // sharpens estimates whose degrees are insensitive to theta (near-clipped
  // neighbours), where a small residual still leaves theta loose.
  if (any_free()) {
    Vector e = expected_degrees(theta, n, directed);
    res = max_residual(e, d, clipped);
    for (int step = 0; step < 100; ++step) {
      std::vector<Eigen::Index> free;
      for (Eigen::Index k = 0; k < dim; ++k)
        if (!clipped[static_cast<std::size_t>(k)]) free.push_back(k);
      const Matrix J = degree_jacobian(theta, n, directed);
      Matrix Jf(free.size(), free.size());
      Vector rf(static_cast<Eigen::Index>(free.size()));
      for (std::size_t r = 0; r < free.size(); ++r) {
        rf[static_cast<Eigen::Index>(r)] = d[free[r]] - e[free[r]];
        for (std::size_t c = 0; c < free.size(); ++c)
          Jf(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = J(free[r], free[c]);
      }
      const Vector delta = Jf.completeOrthogonalDecomposition().solve(rf);
      if (res < options.tolerance && delta.cwiseAbs().maxCoeff() < kNewtonStep) break;
      double scale = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 30; ++ls, scale *= 0.5) {
        Vector trial = theta;
        for (std::size_t r = 0; r < free.size(); ++r) trial[free[r]] += scale * delta[static_cast<Eigen::Index>(r)];
        if (trial.cwiseAbs().maxCoeff() > tmax + 1e-12) continue;
        const Vector et = expected_degrees(trial, n, directed);
        const double rt = max_residual(et, d, clipped);
        if (rt < res) {
          theta = trial;
          e = et;
          res = rt;
          improved = true;
          break;
        }
      }
      ++it;
      if (!improved) break;
    }
  }

  if (directed) {
    double in_sum = 0.0, out_sum = 0.0;
    std::size_t in_cnt = 0, out_cnt = 0;
    for (Eigen::Index i = 0; i < N; ++i) {
      if (!clipped[static_cast<std::size_t>(i)]) in_sum += theta[i], ++in_cnt;
      if (!clipped[static_cast<std::size_t>(N + i)]) out_sum += theta[N + i], ++out_cnt;
    }
    if (in_cnt > 0 && out_cnt > 0) {
      const double c = 0.5 * (out_sum / static_cast<double>(out_cnt) - in_sum / static_cast<double>(in_cnt));
      for (Eigen::Index i = 0; i < N; ++i) {
        if (!clipped[static_cast<std::size_t>(i)]) theta[i] += c;
        if (!clipped[static_cast<std::size_t>(N + i)]) theta[N + i] -= c;
      }
    }
  }

  out.theta_hat = FitnessState(theta, directed);
  for (std::size_t k = 0; k < clipped.size(); ++k)
    if (clipped[k]) out.clipped_nodes.push_back(k);
  out.max_residual = any_free() ? res : 0.0;
  out.converged = any_free() && res < options.tolerance;
  out.iterations = it;
  return out;
}

MleSeries mle_series(const TemporalNetwork& net, const MleOptions& options) {
  MleSeries s;
  for (const auto& snap : net.snapshots()) {
    SnapshotMle m = mle_snapshot(snap, options);
    std::vector<bool> mask(m.theta_hat.dim(), false);
    for (auto k : m.clipped_nodes) mask[k] = true;
    if (!m.converged) ++s.unconverged;
    s.theta_hats.states.push_back(std::move(m.theta_hat));
    s.theta_hats.times.push_back(snap.timestamp());
    s.clipped.push_back(std::move(mask));
  }
  return s;
}

}  // namespace tnirf
