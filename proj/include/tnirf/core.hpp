#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tnirf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One observed unweighted graph. Entries are stored row-major; entry (i, j)
/// is the arc i -> j. Undirected snapshots keep the matrix symmetric, and
/// no snapshot ever carries a self-loop.
class AdjacencySnapshot {
public:
  AdjacencySnapshot() = default;
  AdjacencySnapshot(std::size_t n, bool directed, std::int64_t timestamp = 0);

  /// Validating constructor from a dense 0/1 matrix.
  static AdjacencySnapshot from_matrix(const Eigen::MatrixXi& entries, bool directed,
                                       std::int64_t timestamp = 0);

  std::size_t n() const noexcept { return n_; }
  bool directed() const noexcept { return directed_; }
  std::int64_t timestamp() const noexcept { return timestamp_; }
  void set_timestamp(std::int64_t t) noexcept { timestamp_ = t; }

  bool has_arc(std::size_t i, std::size_t j) const { return entries_[i * n_ + j] != 0; }
  /// Sets arc i -> j (and j -> i when undirected). Throws on i == j.
  void set_arc(std::size_t i, std::size_t j, bool present = true);

  /// Number of nonzero entries, i.e. ordered pairs (both orientations of an
  /// undirected edge count).
  std::size_t arc_count() const;
  /// Existing arcs; undirected snapshots list each edge once with i < j.
  std::vector<std::pair<std::size_t, std::size_t>> arcs() const;
  Eigen::MatrixXi to_matrix() const;

  /// Induced subgraph on `keep` (in the given order).
  AdjacencySnapshot induced(const std::vector<std::size_t>& keep) const;

  friend bool operator==(const AdjacencySnapshot&, const AdjacencySnapshot&) = default;

private:
  std::size_t n_ = 0;
  bool directed_ = false;
  std::int64_t timestamp_ = 0;
  std::vector<std::uint8_t> entries_;
};

/// Ordered snapshots sharing node count and directedness.
class TemporalNetwork {
public:
  TemporalNetwork() = default;
  TemporalNetwork(std::vector<AdjacencySnapshot> snapshots, std::vector<std::string> node_labels);

  std::size_t n() const noexcept { return labels_.size(); }
  bool directed() const noexcept { return directed_; }
  std::size_t size() const noexcept { return snapshots_.size(); }
  const std::vector<AdjacencySnapshot>& snapshots() const noexcept { return snapshots_; }
  const AdjacencySnapshot& operator[](std::size_t t) const { return snapshots_.at(t); }
  const std::vector<std::string>& node_labels() const noexcept { return labels_; }

  friend bool operator==(const TemporalNetwork&, const TemporalNetwork&) = default;

private:
  std::vector<AdjacencySnapshot> snapshots_;
  std::vector<std::string> labels_;
  bool directed_ = false;
};

/// Latent fitness vector at one time. Directed states hold 2n coordinates:
/// 0..n-1 are in-fitnesses, n..2n-1 are out-fitnesses. This ordering is used
/// by every VAR parameter and shock vector in the library.
class FitnessState {
public:
  FitnessState() = default;
  FitnessState(Vector values, bool directed);

  static FitnessState undirected(Vector values) { return {std::move(values), false}; }
  static FitnessState directed(const Vector& in, const Vector& out);

  bool is_directed() const noexcept { return directed_; }
  std::size_t n() const noexcept;
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.size()); }
  const Vector& values() const noexcept { return values_; }

  /// Fitness used for arcs arriving at node j (equals the undirected fitness).
  double in(std::size_t j) const { return values_[static_cast<Eigen::Index>(j)]; }
  /// Fitness used for arcs leaving node i.
  double out(std::size_t i) const {
    return values_[static_cast<Eigen::Index>(directed_ ? i + n() : i)];
  }

private:
  Vector values_;
  bool directed_ = false;
};

/// Index of a latent coordinate in the global ordering.
enum class CoordinateKind { undirected, in, out };
std::size_t coordinate_index(CoordinateKind kind, std::size_t node, std::size_t n);
std::string to_string(CoordinateKind kind);

struct FitnessSeries {
  std::vector<FitnessState> states;
  /// Ordinal time of each state; empty means 1..T.
  std::vector<std::int64_t> times;

  std::size_t size() const noexcept { return states.size(); }
  std::int64_t time(std::size_t k) const {
    return times.empty() ? static_cast<std::int64_t>(k + 1) : times.at(k);
  }
  /// T x d matrix, one row per time.
  Matrix as_matrix() const;
  static FitnessSeries from_matrix(const Matrix& rows, bool directed);
  void validate() const;
};

/// theta_t = mu + B theta_{t-1} + w_t, w_t ~ N(0, Sigma).
struct VarParams {
  Vector mu;
  Matrix B;
  Matrix Sigma;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mu.size()); }
  /// Shapes, finiteness, symmetric PSD Sigma.
  void validate() const;
  bool is_stationary() const;
};

/// Homogeneous VAR: B has diagonal a and off-diagonal b (times the sparsity
/// probability p in the averaged sparse model), mu = mu 1, Sigma = sigma2 I.
struct MeanFieldParams {
  double a = 0.0;
  double b = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  std::size_t n = 2;
  double p = 1.0;

  void validate() const;
  /// Off-diagonal entry of E[B].
  double effective_b() const noexcept { return b * p; }
  /// a - b(p): the eigenvalue of every mode orthogonal to 1.
  double contrast_eigenvalue() const noexcept { return a - effective_b(); }
  /// a + b p (n - 1): eigenvalue along 1.
  double lambda1() const noexcept { return a + effective_b() * static_cast<double>(n - 1); }
  bool is_stationary() const noexcept;
  /// Dense VAR with E[B]; undirected, dimension n.
  VarParams to_var() const;
  double stationary_fitness() const;
};

struct ShockSpec {
  std::size_t tau = 0;
  Vector delta;
};

struct GaussianMoments {
  Vector mean;
  Matrix cov;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
  void validate() const;
};

// --- shared linear algebra --------------------------------------------------

/// max |eigenvalue| of a square finite matrix.
double spectral_radius(const Matrix& B);

/// (I - B)^{-1} mu via LU solve. Throws StationarityError when the spectral
/// radius of B is >= 1; warns when the system is ill-conditioned.
Vector stationary_mean(const VarParams& params);

/// Solution P of P = B P B^T + Sigma (discrete Lyapunov), by the doubling
/// iteration. Requires stationarity.
Matrix stationary_covariance(const VarParams& params);

/// Symmetric square root of a PSD matrix. Eigenvalues in [-tol, 0) are
/// clipped to zero; anything more negative throws NumericalError.
Matrix psd_sqrt(const Matrix& S, double tol = 1e-10);

/// Dense mean-field matrix (diagonal a, off-diagonal b).
Matrix meanfield_matrix(double a, double b, std::size_t n);

bool all_finite(const Matrix& m);

}  // namespace tnirf
