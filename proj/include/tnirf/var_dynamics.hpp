#pragma once

#include "tnirf/core.hpp"
#include "tnirf/rng.hpp"

#include <cstdint>
#include <utility>

namespace tnirf {

/// theta_t = mu + B theta_{t-1} + w_t for t = 1..T starting at theta0.
/// Noise uses the symmetric square root of Sigma; deterministic given seed.
FitnessSeries simulate_var(const VarParams& params, const FitnessState& theta0, std::size_t T,
                           std::uint64_t seed);
FitnessSeries simulate_var(const VarParams& params, const FitnessState& theta0, std::size_t T, Rng& rng);

/// Law of theta_{tau+h} given theta_tau:
///   mean = sum_{k<h} B^k mu + B^h theta_tau,  cov = sum_{k<h} B^k Sigma (B^k)^T.
GaussianMoments conditional_moments(const VarParams& params, const Vector& theta_tau, std::size_t h);

/// Closed form of B^t for the mean-field matrix:
///   (a-b)^t I + (lambda1^t - (a-b)^t)/n * ones.
Matrix meanfield_matrix_power(const MeanFieldParams& mf, std::size_t t);

/// sum_{k<t} x^k, with the limit t when x is within 1e-12 of 1.
double geometric_sum(double x, std::size_t t) noexcept;

/// Homogeneous conditional law t steps after theta0 * 1.
struct MeanFieldMoments {
  double mean = 0.0;         // per-node conditional mean
  double variance = 0.0;     // Sigma_t diagonal entry
  double covariance = 0.0;   // Sigma_t off-diagonal entry
  double correlation = 0.0;  // covariance / variance (0 when t = 0)
};
MeanFieldMoments meanfield_conditional_moments(const MeanFieldParams& mf, double theta0, std::size_t t);

/// Conditional means of the shocked node and of any other node t steps after
/// node 0 receives theta0 + delta while the rest stay at theta0.
struct ShockedMeans {
  double shocked = 0.0;
  double others = 0.0;
};
ShockedMeans shocked_means(const MeanFieldParams& mf, double theta0, double delta, std::size_t t);

/// Averaged sparse model: off-diagonal b -> b p, p -> 1.
MeanFieldParams sparse_expected_meanfield(const MeanFieldParams& mf);

/// One quenched realisation of the sparse mean-field B: diagonal a, each
/// off-diagonal entry b with probability p, else 0.
Matrix sample_sparse_meanfield_matrix(const MeanFieldParams& mf, Rng& rng);

}  // namespace tnirf
