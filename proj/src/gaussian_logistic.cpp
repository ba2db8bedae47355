#include "tnirf/gaussian_logistic.hpp"

#include "tnirf/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace tnirf {

namespace {

constexpr double kSaturation = 36.0;
constexpr double kStopTolerance = 1e-12;
constexpr int kMinOrder = 8;
constexpr int kMaxOrder = 128;  // the node recurrence loses accuracy beyond this
constexpr double kTail = 9.0;     // standard-normal mass beyond 9 is < 1e-18

// Nodes by Newton iteration on the orthonormal Hermite recurrence with the
// classic asymptotic starting guesses. Nodes are symmetric; only the
// nonnegative half is solved for.
detail::HermiteRule compute_hermite_rule(int order) {
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  detail::HermiteRule rule;
  rule.nodes.assign(static_cast<std::size_t>(order), 0.0);
  rule.weights.assign(static_cast<std::size_t>(order), 0.0);
  const int half = (order + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * order + 1.0) - 1.85575 * std::pow(2.0 * order + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(order), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i - 2)];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * order) * p2;
      const double step = p1 / pp;
      z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(order - 1 - i);
    rule.nodes[lo] = z;
    rule.nodes[hi] = -z;
    rule.weights[lo] = 2.0 / (pp * pp);
    rule.weights[hi] = rule.weights[lo];
  }
  return rule;
}

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGlNodes = {0.0, 0.5384693101056831, -0.5384693101056831, 0.9061798459386640,
                                            -0.9061798459386640};
constexpr std::array<double, 5> kGlWeights = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                              0.2369268850561891, 0.2369268850561891};

// Composite Gauss-Legendre of phi(z) sigmoid(m + s z) over [lo, hi].
double legendre_panels(double m, double s, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double c = lo + (k + 0.5) * h;
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      const double z = c + 0.5 * h * kGlNodes[q];
      total += kGlWeights[q] * std::exp(-0.5 * z * z) * sigmoid(m + s * z);
    }
  }
  return total * 0.5 * h / std::sqrt(2.0 * std::numbers::pi);
}

// Wide Gaussians: the sigmoid step at z0 = -m/s is sharp on the z scale, so
// split there and refine each side by panel doubling.
double legendre_integral(double m, double s) {
  const double z0 = std::clamp(-m / s, -kTail, kTail);
  double previous = 0.0;
  for (int panels = 16; panels <= (1 << 16); panels *= 2) {
    double current = 0.0;
    if (z0 > -kTail) current += legendre_panels(m, s, -kTail, z0, panels);
    if (z0 < kTail) current += legendre_panels(m, s, z0, kTail, panels);
    if (panels > 16 && std::abs(current - previous) < kStopTolerance) return current;
    previous = current;
  }
  return previous;
}

double quadrature(const detail::HermiteRule& rule, double m, double scale) {
  double total = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k)
    total += rule.weights[k] * sigmoid(m + scale * rule.nodes[k]);
  return total / std::sqrt(std::numbers::pi);
}

void check_args(double m, double s2, const char* op) {
  if (!std::isfinite(m)) throw DomainError(std::string(op) + ": mean must be finite");
  if (!(s2 >= 0.0) || !std::isfinite(s2)) throw DomainError(std::string(op) + ": variance must be >= 0");
}

}  // namespace

namespace detail {

const HermiteRule& hermite_rule(int order) {
  if (order < 1 || order > kMaxOrder) throw DomainError("Gauss-Hermite order must lie in [1, 128]");
  static std::mutex mutex;
  static std::map<int, HermiteRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_hermite_rule(order)).first;
  return it->second;
}

}  // namespace detail

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("logit needs p in (0, 1)");
  return std::log(p / (1.0 - p));
}

double logistic_normal_exact(double m, double s2) {
  check_args(m, s2, "logistic_normal_exact");
  if (s2 == 0.0) return sigmoid(m);
  const double s = std::sqrt(s2);
  // Saturated regime: the whole Gaussian mass sits where sigmoid is flat.
  if (std::abs(m) - 10.0 * s > kSaturation) return sigmoid(m);
  const double scale = std::sqrt(2.0) * s;
  double previous = quadrature(detail::hermite_rule(kMinOrder), m, scale);
  for (int order = 2 * kMinOrder; order <= kMaxOrder; order *= 2) {
    const double current = quadrature(detail::hermite_rule(order), m, scale);
    if (std::abs(current - previous) < kStopTolerance) return current;
    previous = current;
  }
  return legendre_integral(m, s);
}

double logistic_normal_approx2(double m, double s2) {
  check_args(m, s2, "logistic_normal_approx2");
  // e^m/(1+e^m)^2 = g(1-g) and 1/(1+e^m) = 1-g with g = sigmoid(m); the
  // rewrite avoids overflow for large m without changing the value.
  const double g = sigmoid(m);
  const double h = sigmoid(-m);
  const double q = g * h;
  const double denom = 1.0 + s2 * q;
  return g / std::sqrt(denom) * std::exp(s2 * h * h / (2.0 * denom));
}

double expected_density_homogeneous(double m, double s2, double r, bool exact) {
  if (!(std::abs(r) <= 1.0)) throw DomainError("correlation must lie in [-1, 1]");
  check_args(m, s2, "expected_density_homogeneous");
  const double v = 2.0 * s2 * (1.0 + r);
  return exact ? logistic_normal_exact(2.0 * m, v) : logistic_normal_approx2(2.0 * m, v);
}

double taylor_density(double m, double s2, double r) {
  if (!(std::abs(r) <= 1.0)) throw DomainError("correlation must lie in [-1, 1]");
  if (!std::isfinite(m) || !std::isfinite(s2)) throw DomainError("taylor_density: non-finite argument");
  // e^{2m}(1-e^{2m})/(1+e^{2m})^3 = g(1-g)(1-2g) with g = sigmoid(2m).
  const double g = sigmoid(2.0 * m);
  const double h = sigmoid(-2.0 * m);
  return g + (1.0 + r) * g * h * (h - g) * s2;
}

std::vector<DensityGridRow> density_grid(std::span<const double> ms, std::span<const double> s2s,
                                         std::span<const double> rs) {
  std::vector<DensityGridRow> rows;
  rows.reserve(ms.size() * s2s.size() * rs.size());
  for (double r : rs)
    for (double s2 : s2s)
      for (double m : ms)
        rows.push_back({m, s2, r, expected_density_homogeneous(m, s2, r, true),
                        expected_density_homogeneous(m, s2, r, false), taylor_density(m, s2, r)});
  return rows;
}

}  // namespace tnirf
