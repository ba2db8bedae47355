#include "tnirf/core.hpp"

#include "tnirf/errors.hpp"
#include "tnirf/log.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace tnirf {

namespace {

constexpr double kConditionWarning = 1e12;

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

// --- AdjacencySnapshot -------------------------------------------------------

AdjacencySnapshot::AdjacencySnapshot(std::size_t n, bool directed, std::int64_t timestamp)
    : n_(n), directed_(directed), timestamp_(timestamp), entries_(n * n, 0) {}

AdjacencySnapshot AdjacencySnapshot::from_matrix(const Eigen::MatrixXi& entries, bool directed,
                                                 std::int64_t timestamp) {
  if (entries.rows() != entries.cols())
    throw DimensionError("adjacency matrix must be square, got " + std::to_string(entries.rows()) +
                         "x" + std::to_string(entries.cols()));
  const auto n = static_cast<std::size_t>(entries.rows());
  AdjacencySnapshot snap(n, directed, timestamp);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const int v = entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v != 0 && v != 1)
        throw ValidationError("adjacency entries must be 0 or 1 (entry " + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      if (i == j && v != 0)
        throw ValidationError("self-loop at node " + std::to_string(i));
      if (!directed && v != entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)))
        throw ValidationError("undirected adjacency matrix is not symmetric at " +
                              std::to_string(i) + "," + std::to_string(j));
      snap.entries_[i * n + j] = static_cast<std::uint8_t>(v);
    }
  }
  return snap;
}

void AdjacencySnapshot::set_arc(std::size_t i, std::size_t j, bool present) {
  if (i >= n_ || j >= n_) throw DimensionError("arc endpoint out of range");
  if (i == j) throw ValidationError("self-loop at node " + std::to_string(i));
  entries_[i * n_ + j] = present ? 1 : 0;
  if (!directed_) entries_[j * n_ + i] = present ? 1 : 0;
}

std::size_t AdjacencySnapshot::arc_count() const {
  std::size_t count = 0;
  for (auto e : entries_) count += e;
  return count;
}

std::vector<std::pair<std::size_t, std::size_t>> AdjacencySnapshot::arcs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = directed_ ? 0 : i + 1; j < n_; ++j)
      if (has_arc(i, j)) out.emplace_back(i, j);
  return out;
}

Eigen::MatrixXi AdjacencySnapshot::to_matrix() const {
  Eigen::MatrixXi m(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entries_[i * n_ + j];
  return m;
}

AdjacencySnapshot AdjacencySnapshot::induced(const std::vector<std::size_t>& keep) const {
  AdjacencySnapshot sub(keep.size(), directed_, timestamp_);
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b)
      sub.entries_[a * keep.size() + b] = entries_[keep[a] * n_ + keep[b]];
  return sub;
}

// --- TemporalNetwork ---------------------------------------------------------

TemporalNetwork::TemporalNetwork(std::vector<AdjacencySnapshot> snapshots,
                                 std::vector<std::string> node_labels)
    : snapshots_(std::move(snapshots)), labels_(std::move(node_labels)) {
  if (!snapshots_.empty()) directed_ = snapshots_.front().directed();
  for (std::size_t t = 0; t < snapshots_.size(); ++t) {
    const auto& s = snapshots_[t];
    if (s.n() != labels_.size())
      throw ValidationError("snapshot " + std::to_string(t) + " has " + std::to_string(s.n()) +
                            " nodes, expected " + std::to_string(labels_.size()));
    if (s.directed() != directed_)
      throw ValidationError("snapshot " + std::to_string(t) + " differs in directedness");
    if (t > 0 && s.timestamp() <= snapshots_[t - 1].timestamp())
      throw ValidationError("snapshot timestamps must be strictly increasing (index " +
                            std::to_string(t) + ")");
  }
}

// --- FitnessState ------------------------------------------------------------

FitnessState::FitnessState(Vector values, bool directed) : values_(std::move(values)), directed_(directed) {
  if (!values_.allFinite()) throw ValidationError("fitness state has non-finite entries");
  if (directed_ && values_.size() % 2 != 0)
    throw DimensionError("directed fitness state needs an even dimension");
}

FitnessState FitnessState::directed(const Vector& in, const Vector& out) {
  if (in.size() != out.size()) throw DimensionError("in/out fitness vectors differ in length");
  Vector v(in.size() * 2);
  v << in, out;
  return {std::move(v), true};
}

std::size_t FitnessState::n() const noexcept { return directed_ ? dim() / 2 : dim(); }

std::size_t coordinate_index(CoordinateKind kind, std::size_t node, std::size_t n) {
  if (node >= n) throw DimensionError("node index " + std::to_string(node) + " out of range");
  return kind == CoordinateKind::out ? n + node : node;
}

std::string to_string(CoordinateKind kind) {
  switch (kind) {
    case CoordinateKind::undirected: return "undirected";
    case CoordinateKind::in: return "in";
    case CoordinateKind::out: return "out";
  }
  return "undirected";
}

// --- FitnessSeries -----------------------------------------------------------

Matrix FitnessSeries::as_matrix() const {
  if (states.empty()) return {};
  Matrix m(states.size(), states.front().dim());
  for (std::size_t t = 0; t < states.size(); ++t) m.row(static_cast<Eigen::Index>(t)) = states[t].values().transpose();
  return m;
}

FitnessSeries FitnessSeries::from_matrix(const Matrix& rows, bool directed) {
  FitnessSeries s;
  s.states.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index t = 0; t < rows.rows(); ++t) s.states.emplace_back(rows.row(t).transpose(), directed);
  return s;
}

void FitnessSeries::validate() const {
  if (!times.empty() && times.size() != states.size())
    throw DimensionError("fitness series has mismatched time index");
  for (std::size_t t = 1; t < states.size(); ++t) {
    if (states[t].dim() != states[0].dim() || states[t].is_directed() != states[0].is_directed())
      throw DimensionError("fitness series dimension changes at index " + std::to_string(t));
  }
}

// --- VarParams / MeanFieldParams / GaussianMoments ---------------------------

void VarParams::validate() const {
  const auto d = mu.size();
  if (B.rows() != d || B.cols() != d)
    throw DimensionError("B is " + shape(B) + ", expected " + std::to_string(d) + "x" + std::to_string(d));
  if (Sigma.rows() != d || Sigma.cols() != d)
    throw DimensionError("Sigma is " + shape(Sigma) + ", expected " + std::to_string(d) + "x" +
                         std::to_string(d));
  if (!mu.allFinite() || !B.allFinite() || !Sigma.allFinite())
    throw ValidationError("VAR parameters contain non-finite entries");
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + Sigma.cwiseAbs().maxCoeff()))
    throw ValidationError("Sigma is not symmetric");
  if (d > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Sigma, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw ValidationError("Sigma is not positive semidefinite (min eigenvalue " +
                            std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
}

bool VarParams::is_stationary() const { return spectral_radius(B) < 1.0; }

void MeanFieldParams::validate() const {
  if (n < 2) throw ValidationError("mean-field model needs n >= 2");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ValidationError("sigma2 must be > 0");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("sparsity p must lie in [0, 1]");
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(mu))
    throw ValidationError("mean-field parameters must be finite");
}

bool MeanFieldParams::is_stationary() const noexcept {
  return std::abs(lambda1()) < 1.0 && std::abs(contrast_eigenvalue()) < 1.0;
}

VarParams MeanFieldParams::to_var() const {
  VarParams v;
  v.mu = Vector::Constant(static_cast<Eigen::Index>(n), mu);
  v.B = meanfield_matrix(a, effective_b(), n);
  v.Sigma = sigma2 * Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  return v;
}

double MeanFieldParams::stationary_fitness() const {
  if (!is_stationary())
    throw StationarityError("mean-field model is not stationary (lambda1 = " + std::to_string(lambda1()) + ")");
  return mu / (1.0 - lambda1());
}

void GaussianMoments::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw DimensionError("covariance shape does not match mean");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + cov.cwiseAbs().maxCoeff()))
    throw ValidationError("covariance is not symmetric");
  if (mean.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) throw NumericalError("covariance is not positive semidefinite");
  }
}

// --- linear algebra ----------------------------------------------------------

double spectral_radius(const Matrix& B) {
  if (B.rows() != B.cols()) throw DimensionError("spectral_radius needs a square matrix, got " + shape(B));
  if (!B.allFinite()) throw ValidationError("spectral_radius: non-finite entries");
  if (B.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(B, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Vector stationary_mean(const VarParams& params) {
  params.validate();
  const double rho = spectral_radius(params.B);
  if (!(rho < 1.0))
    throw StationarityError("VAR is not stationary: spectral radius " + std::to_string(rho));
  const auto d = params.mu.size();
  const Matrix A = Matrix::Identity(d, d) - params.B;
  Eigen::PartialPivLU<Matrix> lu(A);
  const double rcond = lu.rcond();
  if (rcond > 0.0 && 1.0 / rcond > kConditionWarning)
    warn("stationary_mean: I - B is ill-conditioned (condition ~ " + std::to_string(1.0 / rcond) + ")");
  return lu.solve(params.mu);
}

Matrix stationary_covariance(const VarParams& params) {
  params.validate();
  const double rho = spectral_radius(params.B);
  if (!(rho < 1.0))
    throw StationarityError("VAR is not stationary: spectral radius " + std::to_string(rho));
  // Doubling: P_{k+1} = P_k + A_k P_k A_k^T, A_{k+1} = A_k^2 sums 2^k terms.
  Matrix P = params.Sigma;
  Matrix A = params.B;
  for (int it = 0; it < 200; ++it) {
    const Matrix increment = A * P * A.transpose();
    P += increment;
    A = A * A;
    if (increment.cwiseAbs().maxCoeff() <= 1e-16 * (1.0 + P.cwiseAbs().maxCoeff()) &&
        A.cwiseAbs().maxCoeff() < 1e-8)
      break;
  }
  return 0.5 * (P + P.transpose());
}

Matrix psd_sqrt(const Matrix& S, double tol) {
  if (S.rows() != S.cols()) throw DimensionError("psd_sqrt needs a square matrix");
  if (S.size() == 0) return S;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  Vector ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev[k] < -tol * scale)
      throw NumericalError("matrix is not positive semidefinite (eigenvalue " + std::to_string(ev[k]) + ")");
    ev[k] = ev[k] > 0.0 ? std::sqrt(ev[k]) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Matrix meanfield_matrix(double a, double b, std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix B = Matrix::Constant(m, m, b);
  B.diagonal().setConstant(a);
  return B;
}

}  // namespace tnirf
