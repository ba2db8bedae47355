#include "tnirf/errors.hpp"
#include "tnirf/gaussian_logistic.hpp"
#include "tnirf/irf.hpp"
#include "tnirf/var_dynamics.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace tnirf;

namespace {

const MeanFieldParams kBaseline{0.3, 0.01, -0.3, 0.1, 50, 1.0};

// Dense oracle: propagate means and covariance with full matrices and sum
// I(m_i + m_j, var(theta_i + theta_j)) over ordered pairs.
double dense_density_irf(const MeanFieldParams& mf, double theta0, double delta, std::size_t t) {
  const VarParams var = mf.to_var();
  const auto n = static_cast<Eigen::Index>(mf.n);
  Vector start = Vector::Constant(n, theta0);
  Vector shocked = start;
  shocked[0] += delta;
  const auto base = conditional_moments(var, start, t);
  const auto shock = conditional_moments(var, shocked, t);
  auto dens = [&](const Vector& m) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j)
          total += logistic_normal_exact(m[i] + m[j], base.cov(i, i) + base.cov(j, j) + 2 * base.cov(i, j));
    return total / static_cast<double>(n * (n - 1));
  };
  return dens(shock.mean) - dens(base.mean);
}

}  // namespace

TEST_CASE("irf_theta") {
  Matrix B(2, 2);
  B << 0.5, 0.2, 0.1, 0.3;
  Vector d(2);
  d << 1.0, -1.0;
  CHECK((irf_theta(B, d, 0) - d).norm() == 0.0);
  CHECK((irf_theta(B, d, 3) - B * B * B * d).norm() < 1e-15);
  CHECK_THROWS_AS(irf_theta(B, Vector::Zero(3), 1), DimensionError);
  Vector e = Vector::Zero(50);
  e[0] = -10.0;
  CHECK((irf_theta(kBaseline, e, 4) - irf_theta(kBaseline.to_var().B, e, 4)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic density IRF equals the dense oracle") {
  const double theta_s = kBaseline.stationary_fitness();
  // Frozen from an independent dense-matrix computation with adaptive quadrature.
  CHECK(irf_density_meanfield(kBaseline, theta_s, -10.0, 1, true) ==
        doctest::Approx(-0.011910134449576774).epsilon(1e-9));
  CHECK(irf_density_meanfield(kBaseline, theta_s, -10.0, 2, true) ==
        doctest::Approx(-0.011949970023566459).epsilon(1e-9));
  CHECK(irf_density_meanfield(kBaseline, theta_s, -10.0, 5, true) ==
        doctest::Approx(-0.006461275524526876).epsilon(1e-9));
  MeanFieldParams small{0.4, 0.05, 0.2, 0.3, 6, 1.0};
  for (std::size_t t : {1, 3, 8})
    CHECK(std::abs(irf_density_meanfield(small, -0.5, 2.0, t, true) - dense_density_irf(small, -0.5, 2.0, t)) < 1e-12);
}

TEST_CASE("density IRF edge cases") {
  CHECK(irf_density_meanfield(kBaseline, 0.0, 0.0, 3, true) == 0.0);
  CHECK_THROWS_AS(irf_density_meanfield(kBaseline, 0.0, -10.0, 0, true), DomainError);
  MeanFieldParams unstable = kBaseline;
  unstable.a = 0.6;
  CHECK_THROWS_AS(irf_density_meanfield(unstable, 0.0, -10.0, 1, true), StationarityError);
}

TEST_CASE("property: antisymmetry at mu = theta0 = 0") {
  MeanFieldParams mf = kBaseline;
  mf.mu = 0.0;
  for (std::size_t t : {1, 2, 10}) {
    const double down = irf_density_meanfield(mf, 0.0, -10.0, t, true);
    const double up = irf_density_meanfield(mf, 0.0, 10.0, t, true);
    CHECK(std::abs(down + up) < 1e-10);
  }
  CHECK(irf_density_meanfield(mf, 0.0, -10.0, 1, true) == doctest::Approx(-0.06379940021547414).epsilon(1e-9));
}

TEST_CASE("Monte Carlo IRF: zero shock, determinism, thread invariance") {
  const VarParams var = MeanFieldParams{0.4, 0.05, -0.2, 0.2, 6, 1.0}.to_var();
  const auto theta = FitnessState::undirected(stationary_mean(var));
  const auto reg = MetricRegistry::with_builtins();
  McOptions o;
  o.n_samples = 500;
  o.seed = 12;
  ShockSpec zero{0, Vector::Zero(6)};
  for (const auto est : {McEstimator::rao_blackwell, McEstimator::edge_sampled}) {
    o.estimator = est;
    const auto s = irf_metric_mc(var, theta, zero, reg.get("density"), 5, o);
    for (const auto& p : s.points) CHECK(p.value == 0.0);
  }
  ShockSpec shock{0, Vector::Zero(6)};
  shock.delta[2] = -3.0;
  o.threads = 1;
  const auto a = irf_metric_mc(var, theta, shock, reg.get("density"), 5, o);
  o.threads = 4;
  const auto b = irf_metric_mc(var, theta, shock, reg.get("density"), 5, o);
  for (std::size_t k = 0; k < 5; ++k) CHECK(a.points[k].value == b.points[k].value);
  CHECK(a.points.front().t == 1);
  CHECK(a.points.front().value < 0.0);
  CHECK_THROWS_AS(irf_metric_mc(var, FitnessState::undirected(Vector::Zero(5)), shock, reg.get("density"), 5, o),
                  DimensionError);
}

TEST_CASE("Monte Carlo IRF agrees with the analytic IRF on a small model") {
  const MeanFieldParams mf{0.4, 0.05, -0.2, 0.2, 6, 1.0};
  const auto theta = FitnessState::undirected(Vector::Constant(6, mf.stationary_fitness()));
  ShockSpec shock{0, Vector::Zero(6)};
  shock.delta[0] = -2.0;
  McOptions o;
  o.n_samples = 20000;
  o.seed = 5;
  const auto reg = MetricRegistry::with_builtins();
  const auto s = irf_metric_mc(mf.to_var(), theta, shock, reg.get("density"), 6, o);
  for (const auto& p : s.points) {
    const double exact = irf_density_meanfield(mf, mf.stationary_fitness(), -2.0, p.t, true);
    CHECK(std::abs(p.value - exact) < std::max(4 * p.std_error, 1e-6));
  }
}

TEST_CASE("replicate paths and percentile bands") {
  const VarParams var = MeanFieldParams{0.5, 0.05, 0.0, 0.3, 5, 1.0}.to_var();
  const auto theta = FitnessState::undirected(Vector::Zero(5));
  ShockSpec shock{0, Vector::Zero(5)};
  shock.delta[1] = 1.0;
  McOptions o;
  o.n_samples = 200;
  o.seed = 2;
  const auto reg = MetricRegistry::with_builtins();
  const auto paths = irf_paths_mc(var, theta, shock, reg.get("density"), 15, o);
  REQUIRE(paths.paths.size() == 200);
  const auto bands = paths.bands();
  REQUIRE(bands.size() == 15);
  for (const auto& b : bands) {
    CHECK(b.p10 <= b.mean + 1e-15);
    CHECK(b.mean <= b.p90 + 1e-15);
  }
  CHECK(bands.front().mean > 0.0);
  CHECK(std::abs(bands.back().mean) < std::abs(bands.front().mean));
  const auto again = irf_paths_mc(var, theta, shock, reg.get("density"), 15, o);
  CHECK(again.paths == paths.paths);
}

TEST_CASE("quantile") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({0.0, 10.0}, 0.1) == doctest::Approx(1.0));
  CHECK(quantile({4.0}, 0.9) == 4.0);
  CHECK_THROWS_AS(quantile({}, 0.5), DomainError);
  CHECK_THROWS_AS(quantile({1.0}, 1.5), DomainError);
}

TEST_CASE("sweep shapes") {
  SweepConfig cfg;
  CHECK(sweep_studies().size() == 7);
  const auto delta = comparative_statics(cfg, "delta");
  CHECK(delta.size() == 3 * 3 * cfg.horizon);
  const auto ab = comparative_statics(cfg, "ab_fixed_lambda");
  std::set<std::pair<double, double>> pairs;
  for (const auto& r : ab) pairs.insert({r.a, r.b});
  CHECK(pairs == std::set<std::pair<double, double>>{{0.05, 1.5102e-2}, {0.3, 0.01}, {0.75, 8.1633e-4}});
  for (const auto& r : ab) CHECK(r.a + 49 * r.b == doctest::Approx(0.79).epsilon(1e-4));
  CHECK_THROWS_AS(comparative_statics(cfg, "nope"), DomainError);
}

TEST_CASE("non-stationary sweep points are skipped, not fatal") {
  SweepConfig cfg;
  cfg.a_values = {0.3, 0.6};
  const auto rows = comparative_statics(cfg, "lambda_via_a");
  std::size_t skipped = 0;
  for (const auto& r : rows) skipped += r.skipped ? 1 : 0;
  CHECK(skipped == cfg.mus.size());
  CHECK(rows.size() == cfg.mus.size() * (cfg.horizon + 1));
}

TEST_CASE("sigma2 threshold search brackets zero") {
  SweepConfig cfg;
  const auto th = locate_sigma2_thresholds(cfg);
  REQUIRE(th.lower);
  REQUIRE(th.upper);
  CHECK(*th.lower < 0.0);
  CHECK(*th.upper > 0.0);
  // The slope flips sign across each located root.
  auto slope = [&](double mu) {
    MeanFieldParams up = cfg.baseline, down = cfg.baseline;
    up.mu = down.mu = mu;
    const double th0 = up.stationary_fitness();
    up.sigma2 *= 1.001;
    down.sigma2 *= 0.999;
    return irf_density_meanfield(up, th0, cfg.delta, 1, false) - irf_density_meanfield(down, th0, cfg.delta, 1, false);
  };
  CHECK(slope(*th.lower - 0.02) * slope(*th.lower + 0.02) < 0.0);
  CHECK(slope(*th.upper - 0.02) * slope(*th.upper + 0.02) < 0.0);
}
