#include "tnirf/core.hpp"
#include "tnirf/errors.hpp"
#include "tnirf/rng.hpp"

#include <doctest.h>

#include <random>

using namespace tnirf;

namespace {

// Random stable B with spectral radius `radius`.
Matrix random_stable(std::size_t d, double radius, std::uint64_t seed) {
  Rng rng = make_stream(seed);
  std::normal_distribution<double> z;
  Matrix B(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    for (Eigen::Index j = 0; j < B.cols(); ++j) B(i, j) = z(rng);
  return B * (radius / spectral_radius(B));
}

}  // namespace

TEST_CASE("snapshot rejects self-loops and asymmetric undirected input") {
  AdjacencySnapshot A(3, false);
  CHECK_THROWS_AS(A.set_arc(1, 1), ValidationError);
  CHECK_THROWS_AS(A.set_arc(0, 3), DimensionError);

  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(3, 3);
  m(0, 1) = 1;
  CHECK_THROWS_AS(AdjacencySnapshot::from_matrix(m, false), ValidationError);
  CHECK_NOTHROW(AdjacencySnapshot::from_matrix(m, true));
  m(1, 0) = 1;
  m(2, 2) = 1;
  CHECK_THROWS_AS(AdjacencySnapshot::from_matrix(m, false), ValidationError);
  m(2, 2) = 2;
  CHECK_THROWS_AS(AdjacencySnapshot::from_matrix(m, true), ValidationError);
  CHECK_THROWS_AS(AdjacencySnapshot::from_matrix(Eigen::MatrixXi::Zero(2, 3), true), DimensionError);
}

TEST_CASE("undirected arcs are mirrored and listed once") {
  AdjacencySnapshot A(4, false);
  A.set_arc(2, 0);
  A.set_arc(1, 3);
  CHECK(A.has_arc(0, 2));
  CHECK(A.arc_count() == 4);
  const auto arcs = A.arcs();
  REQUIRE(arcs.size() == 2);
  CHECK(arcs[0] == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(arcs[1] == std::pair<std::size_t, std::size_t>{1, 3});
  A.set_arc(0, 2, false);
  CHECK_FALSE(A.has_arc(2, 0));
}

TEST_CASE("induced subgraph keeps order") {
  AdjacencySnapshot A(4, true, 7);
  A.set_arc(3, 1);
  A.set_arc(1, 2);
  const auto S = A.induced({3, 1});
  CHECK(S.n() == 2);
  CHECK(S.timestamp() == 7);
  CHECK(S.has_arc(0, 1));
  CHECK(S.arc_count() == 1);
}

TEST_CASE("temporal network validates its snapshots") {
  std::vector<AdjacencySnapshot> s{AdjacencySnapshot(3, false, 1), AdjacencySnapshot(3, false, 2)};
  CHECK_NOTHROW(TemporalNetwork(s, {"a", "b", "c"}));
  CHECK_THROWS_AS(TemporalNetwork(s, {"a", "b"}), ValidationError);
  s[1] = AdjacencySnapshot(3, true, 2);
  CHECK_THROWS_AS(TemporalNetwork(s, {"a", "b", "c"}), ValidationError);
  s[1] = AdjacencySnapshot(3, false, 1);
  CHECK_THROWS_AS(TemporalNetwork(s, {"a", "b", "c"}), ValidationError);
}

TEST_CASE("fitness state ordering") {
  Vector in(2), out(2);
  in << 1, 2;
  out << 3, 4;
  const auto s = FitnessState::directed(in, out);
  CHECK(s.n() == 2);
  CHECK(s.in(1) == 2);
  CHECK(s.out(0) == 3);
  CHECK(coordinate_index(CoordinateKind::out, 1, 2) == 3);
  CHECK(coordinate_index(CoordinateKind::in, 1, 2) == 1);
  CHECK_THROWS_AS(coordinate_index(CoordinateKind::in, 2, 2), DimensionError);
  const auto u = FitnessState::undirected(in);
  CHECK(u.in(0) == u.out(0));
  CHECK_THROWS_AS(FitnessState(Vector::Constant(3, 0.0), true), DimensionError);
  CHECK_THROWS_AS(FitnessState::undirected(Vector::Constant(2, std::nan(""))), ValidationError);
}

TEST_CASE("VarParams validation") {
  VarParams p{Vector::Zero(2), Matrix::Zero(2, 2), Matrix::Identity(2, 2)};
  CHECK_NOTHROW(p.validate());
  p.Sigma(0, 1) = 0.5;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.Sigma(1, 0) = 0.5;
  p.Sigma(0, 0) = 0.1;
  CHECK_THROWS_AS(p.validate(), ValidationError);  // not PSD
  p.Sigma = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(p.validate(), DimensionError);
}

TEST_CASE("mean-field eigenvalues and validation") {
  MeanFieldParams mf{0.3, 0.01, -0.3, 0.1, 50, 1.0};
  CHECK(mf.lambda1() == doctest::Approx(0.79).epsilon(1e-14));
  CHECK(mf.contrast_eigenvalue() == doctest::Approx(0.29));
  CHECK(mf.is_stationary());
  CHECK(mf.stationary_fitness() == doctest::Approx(-0.3 / 0.21).epsilon(1e-14));
  const Matrix B = mf.to_var().B;
  CHECK(spectral_radius(B) == doctest::Approx(0.79).epsilon(1e-12));

  mf.b = 0.02;  // lambda1 = 1.28
  CHECK_FALSE(mf.is_stationary());
  CHECK_THROWS_AS(mf.stationary_fitness(), StationarityError);

  MeanFieldParams bad{0.3, 0.01, 0.0, 0.0, 5, 1.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.sigma2 = 0.1;
  bad.n = 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("stationary mean equals the Neumann series") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix B = random_stable(4, 0.8, seed);
    Vector mu(4);
    mu << 0.3, -0.1, 0.7, -0.4;
    const VarParams p{mu, B, Matrix::Identity(4, 4)};
    Vector sum = Vector::Zero(4), term = mu;
    for (int k = 0; k < 400; ++k) {
      sum += term;
      term = B * term;
    }
    CHECK((stationary_mean(p) - sum).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("stationary covariance solves the Lyapunov equation") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const Matrix B = random_stable(5, 0.95, seed);
    Matrix L = Matrix::Random(5, 5);
    const Matrix S = L * L.transpose() + 0.1 * Matrix::Identity(5, 5);
    const VarParams p{Vector::Zero(5), B, S};
    const Matrix P = stationary_covariance(p);
    CHECK((P - (B * P * B.transpose() + S)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("non-stationary VAR is refused") {
  Matrix B = Matrix::Identity(2, 2) * 1.01;
  const VarParams p{Vector::Zero(2), B, Matrix::Identity(2, 2)};
  CHECK_FALSE(p.is_stationary());
  CHECK_THROWS_AS(stationary_mean(p), StationarityError);
  CHECK_THROWS_AS(stationary_covariance(p), StationarityError);
}

TEST_CASE("psd_sqrt") {
  Matrix S(2, 2);
  S << 2, 1, 1, 2;
  const Matrix R = psd_sqrt(S);
  CHECK((R * R - S).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((R - R.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  Matrix singular = Matrix::Ones(2, 2);
  CHECK(((psd_sqrt(singular) * psd_sqrt(singular)) - singular).cwiseAbs().maxCoeff() < 1e-12);
  S << 1, 2, 2, 1;
  CHECK_THROWS_AS(psd_sqrt(S), NumericalError);
}

TEST_CASE("fitness series matrix round trip") {
  Matrix rows(3, 4);
  rows << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  const auto s = FitnessSeries::from_matrix(rows, true);
  CHECK(s.size() == 3);
  CHECK(s.states[1].out(0) == 7);
  CHECK(s.time(2) == 3);
  CHECK(s.as_matrix() == rows);
}

TEST_CASE("make_stream separates paths") {
  Rng a = make_stream(5, {1, 2});
  Rng b = make_stream(5, {1, 2});
  Rng c = make_stream(5, {2, 1});
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
}
