#include "tnirf/errors.hpp"
#include "tnirf/gaussian_logistic.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace tnirf;

namespace {

// Composite Simpson on [-12, 12] standard deviations; independent of the
// Hermite machinery.
double simpson_oracle(double m, double s2) {
  const double s = std::sqrt(s2);
  const int N = 20000;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / N;
  double total = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double z = lo + k * h;
    const double f = sigmoid(m + s * z) * std::exp(-0.5 * z * z);
    total += (k == 0 || k == N ? 1.0 : (k % 2 ? 4.0 : 2.0)) * f;
  }
  return total * h / 3.0 / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("sigmoid and logit") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(std::isfinite(sigmoid(-1e300)));
  CHECK(logit(sigmoid(1.3)) == doctest::Approx(1.3).epsilon(1e-14));
  CHECK_THROWS_AS(logit(0.0), DomainError);
  CHECK_THROWS_AS(logit(1.0), DomainError);
}

TEST_CASE("Hermite rule integrates polynomials exactly") {
  for (int order : {8, 16, 64}) {
    const auto& rule = detail::hermite_rule(order);
    double w = 0.0, x2 = 0.0, x4 = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      w += rule.weights[k];
      x2 += rule.weights[k] * rule.nodes[k] * rule.nodes[k];
      x4 += rule.weights[k] * std::pow(rule.nodes[k], 4);
    }
    const double sp = std::sqrt(std::numbers::pi);
    CHECK(w == doctest::Approx(sp).epsilon(1e-13));
    CHECK(x2 == doctest::Approx(sp / 2).epsilon(1e-13));
    CHECK(x4 == doctest::Approx(3 * sp / 4).epsilon(1e-12));
  }
  CHECK_THROWS_AS(detail::hermite_rule(0), DomainError);
  CHECK_THROWS_AS(detail::hermite_rule(129), DomainError);
}

TEST_CASE("logistic-normal integral against frozen adaptive-quadrature values") {
  // scipy.integrate.quad over +-40 sd at epsabs 1e-15.
  struct Case {
    double m, s2, expected;
  };
  const Case cases[] = {{-0.5, 0.01, 0.3778271513931641}, {0.0, 1.0, 0.5},
                        {1.5, 0.5, 0.7961308740954905},   {-3.0, 2.0, 0.09135899001162817},
                        {2.0, 4.0, 0.7752002453966635},   {-1.0, 0.3, 0.2813259093393943},
                        {0.7, 10.0, 0.5767205250146482}};
  for (const auto& c : cases) {
    CAPTURE(c.m);
    CAPTURE(c.s2);
    CHECK(std::abs(logistic_normal_exact(c.m, c.s2) - c.expected) < 1e-12);
    CHECK(std::abs(simpson_oracle(c.m, c.s2) - c.expected) < 1e-10);
  }
}

TEST_CASE("logistic-normal integral edge cases") {
  CHECK(logistic_normal_exact(0.4, 0.0) == sigmoid(0.4));
  CHECK(logistic_normal_approx2(0.4, 0.0) == doctest::Approx(sigmoid(0.4)).epsilon(1e-15));
  CHECK(logistic_normal_exact(-50.0, 0.01) == doctest::Approx(sigmoid(-50.0)).epsilon(1e-10));
  CHECK_THROWS_AS(logistic_normal_exact(0.0, -1.0), DomainError);
  CHECK_THROWS_AS(logistic_normal_exact(NAN, 1.0), DomainError);
  CHECK_THROWS_AS(logistic_normal_approx2(0.0, -1e-3), DomainError);
  CHECK(std::isfinite(logistic_normal_approx2(700.0, 1.0)));
  CHECK(std::isfinite(logistic_normal_approx2(-700.0, 1.0)));
}

TEST_CASE("second-order approximation at the reference point") {
  // Closed form evaluated independently; error against the quadrature value.
  const double a2 = logistic_normal_approx2(-0.5, 0.01);
  CHECK(a2 == doctest::Approx(0.3778273672274914).epsilon(1e-14));
  CHECK(std::abs(a2 - logistic_normal_exact(-0.5, 0.01)) == doctest::Approx(2.1583e-7).epsilon(1e-3));
}

TEST_CASE("property: reflection symmetry and monotonicity") {
  for (double s2 : {0.01, 0.5, 3.0}) {
    double prev = 0.0;
    for (double m = -4.0; m <= 4.0; m += 0.25) {
      const double v = logistic_normal_exact(m, s2);
      CHECK(v + logistic_normal_exact(-m, s2) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(v > prev);
      prev = v;
    }
    CHECK(logistic_normal_exact(0.0, s2) == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("homogeneous density reduces to I(2m, 2 s2 (1 + r))") {
  CHECK(expected_density_homogeneous(-0.5, 0.1, 0.5, true) ==
        doctest::Approx(0.2813259093393943).epsilon(1e-12));
  CHECK(expected_density_homogeneous(0.3, 0.2, -1.0, true) == doctest::Approx(sigmoid(0.6)).epsilon(1e-15));
  CHECK_THROWS_AS(expected_density_homogeneous(0.0, 0.1, 1.5, true), DomainError);
  CHECK_THROWS_AS(taylor_density(0.0, 0.1, -2.0), DomainError);
}

TEST_CASE("Taylor density matches the second derivative expansion") {
  // Small s2: I(2m, v) ~ sigmoid(2m) + v/2 sigmoid''(2m) with v = 2 s2 (1 + r).
  const double m = 0.4, r = 0.3, s2 = 1e-4;
  const double exact = expected_density_homogeneous(m, s2, r, true);
  CHECK(std::abs(taylor_density(m, s2, r) - exact) < 1e-8);
  CHECK(taylor_density(0.0, 1.0, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("density grid layout") {
  const std::vector<double> ms{-1, 0, 1}, s2s{0.1, 0.2}, rs{0.0};
  const auto rows = density_grid(ms, s2s, rs);
  REQUIRE(rows.size() == 6);
  CHECK(rows[1].m == 0.0);
  CHECK(rows[3].s2 == 0.2);
  for (const auto& r : rows) CHECK(r.exact == doctest::Approx(logistic_normal_exact(2 * r.m, 2 * r.s2)).epsilon(1e-15));
}
