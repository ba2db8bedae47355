#pragma once

#include <span>
#include <vector>

namespace tnirf {

/// Logistic function 1 / (1 + e^{-x}), stable for any finite x.
double sigmoid(double x) noexcept;
double logit(double p);

/// E[sigmoid(X)] for X ~ N(m, s2), by Gauss-Hermite quadrature with node
/// doubling (8, 16, ..., 128) until successive estimates differ by < 1e-12.
/// When that does not settle (wide Gaussians), composite Gauss-Legendre on
/// the standard-normal variable split at the sigmoid midpoint takes over.
/// s2 == 0 returns sigmoid(m). Throws DomainError for s2 < 0 or non-finite m.
double logistic_normal_exact(double m, double s2);

/// Second-order approximation of the logistic-normal integral:
///   sigmoid(m) (1 + s2 e^m/(1+e^m)^2)^{-1/2} exp(s2 / (2((1+e^m)^2 + s2 e^m))).
double logistic_normal_approx2(double m, double s2);

/// Expected density when all fitnesses are N(m, s2) with pairwise
/// correlation r: I(2m, 2 s2 (1 + r)). `exact` picks the quadrature,
/// otherwise the second-order approximation.
double expected_density_homogeneous(double m, double s2, double r, bool exact);

/// sigmoid(2m) + (1 + r) e^{2m}(1 - e^{2m})/(1 + e^{2m})^3 s2.
double taylor_density(double m, double s2, double r);

struct DensityGridRow {
  double m;
  double s2;
  double r;
  double exact;
  double approx2;
  double taylor;
};

/// Cartesian product of the three axes, m varying fastest.
std::vector<DensityGridRow> density_grid(std::span<const double> ms, std::span<const double> s2s,
                                         std::span<const double> rs);

namespace detail {

/// Gauss-Hermite rule for weight e^{-x^2} with `order` nodes, 1 <= order <= 128.
/// Cached for the orders used by logistic_normal_exact; other orders are
/// computed on demand.
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const HermiteRule& hermite_rule(int order);

}  // namespace detail

}  // namespace tnirf
