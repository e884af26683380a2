#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hsq {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Local dimensions of a multipartite system, most significant subsystem first.
using Dims = std::vector<int>;
using Qubits = std::vector<int>;

inline constexpr int kDefaultMaxQubits = 12;
inline constexpr double kRankTol = 1e-10;

/// Ordered qubit register. Qubit 0 is the most significant bit of a basis label.
class Register {
public:
  explicit Register(int n_qubits);

  int n_qubits() const { return n_; }
  std::size_t dim() const { return std::size_t{1} << n_; }
  Qubits labels() const;
  Dims dims() const { return Dims(static_cast<std::size_t>(n_), 2); }

  bool operator==(const Register&) const = default;

private:
  int n_;
};

/// Disjoint regions A, B, C, D covering a register. A and C must be nonempty.
struct RegionPartition {
  Qubits a, b, c, d;

  /// Builds and validates a partition; when `d` is omitted it is the complement of A, B, C.
  static RegionPartition make(int n_qubits, Qubits a, Qubits b, Qubits c,
                              std::optional<Qubits> d = std::nullopt);

  void validate(int n_qubits) const;
  int n_qubits() const;
  Qubits abc() const;

  /// Parses "A=0,1;B=2;C=3;D=4,5" (D optional, defaults to the rest).
  static RegionPartition parse(const std::string& text, int n_qubits);
  std::string to_string() const;

  bool operator==(const RegionPartition&) const = default;
};

class PureState {
public:
  /// Throws std::invalid_argument unless |amplitudes|^2 is within 1e-10 of 1.
  explicit PureState(Vector amplitudes);
  static PureState normalized(Vector amplitudes);
  static PureState basis(int n_qubits, std::size_t index);

  const Vector& amplitudes() const { return amps_; }
  int n_qubits() const { return reg_.n_qubits(); }
  std::size_t dim() const { return reg_.dim(); }
  const Register& reg() const { return reg_; }

private:
  Vector amps_;
  Register reg_;
};

/// Hermitian, positive semidefinite, unit-trace operator on a qubit register.
class DensityOp {
public:
  /// Validates Hermiticity (1e-10), eigenvalues (>= -1e-10) and trace (1e-9).
  explicit DensityOp(Matrix m);
  explicit DensityOp(const PureState& psi);

  static DensityOp maximally_mixed(int n_qubits);
  /// Skips validation. For results that are density operators by construction.
  static DensityOp trusted(Matrix m);

  const Matrix& matrix() const { return m_; }
  int n_qubits() const { return reg_.n_qubits(); }
  std::size_t dim() const { return reg_.dim(); }
  const Register& reg() const { return reg_; }
  double purity() const;

private:
  struct Unchecked {};
  DensityOp(Matrix m, Unchecked);

  Matrix m_;
  Register reg_;
};

struct SpectralDecomp {
  RealVector eigenvalues;  // descending
  Matrix eigenvectors;     // columns
  int rank = 0;
};

enum class MatFn { sqrt, inv_sqrt, log };

/// Hermitian eigendecomposition, eigenvalues descending. Rejects non-Hermitian input.
SpectralDecomp eigh(const Matrix& h);
Matrix mat_fn_on_support(const Matrix& h, MatFn fn);
Matrix support_projector(const Matrix& h);
/// Sum of singular values.
double trace_norm(const Matrix& m);

bool is_hermitian(const Matrix& m, double tol = 1e-10);

DensityOp tensor_product(const DensityOp& a, const DensityOp& b,
                         int max_qubits = kDefaultMaxQubits);
PureState tensor_product(const PureState& a, const PureState& b,
                         int max_qubits = kDefaultMaxQubits);

/// Reduced state on `keep`; output qubits follow the order given in `keep`.
DensityOp partial_trace(const DensityOp& rho, std::span<const int> keep);
DensityOp partial_trace(const PureState& psi, std::span<const int> keep);
Matrix partial_transpose(const DensityOp& rho, std::span<const int> region);

/// Spectral purification onto system ⊗ P with dim(P) = rank(rho).
struct Purification {
  Vector amplitudes;
  int n_system_qubits = 0;
  int purifier_dim = 1;

  Dims dims() const;
  DensityOp system_state() const;
};
Purification purify(const DensityOp& rho);

/// Mixed state on a qubit register ⊗ an extension system E of dimension e_dim (E last).
struct ExtendedState {
  Matrix state;
  int n_qubits = 0;
  int e_dim = 1;

  Dims dims() const;
  /// Index of E among the subsystems.
  int e_index() const { return n_qubits; }
  Matrix system_marginal() const;
  /// Throws unless the state is a density operator whose system marginal is within `tol` of rho.
  void validate_against(const DensityOp& rho, double tol = 1e-8) const;
};

ExtendedState as_extension(const Purification& p);

double trace_distance(const Matrix& a, const Matrix& b);

namespace tensor {

std::size_t total_dim(const Dims& dims);

/// Flat offsets contributed by every joint index of the listed subsystems.
std::vector<std::size_t> offsets(const Dims& dims, std::span<const int> subsystems);
std::vector<int> complement(int n_subsystems, std::span<const int> subsystems);

/// Partial trace of a mixed-radix operator. Kept subsystems follow `keep` order.
Matrix reduce(const Matrix& rho, const Dims& dims, std::span<const int> keep);
/// Reshape of a pure vector into (keep) x (rest).
Matrix split(const Vector& psi, const Dims& dims, std::span<const int> keep);
/// Marginal of |psi><psi| on `keep`.
Matrix reduce_pure(const Vector& psi, const Dims& dims, std::span<const int> keep);
/// New subsystem k is old subsystem order[k].
Matrix permute(const Matrix& m, const Dims& dims, std::span<const int> order);
Vector permute(const Vector& v, const Dims& dims, std::span<const int> order);
Dims permuted_dims(const Dims& dims, std::span<const int> order);
Matrix partial_transpose(const Matrix& m, const Dims& dims, std::span<const int> targets);

/// sum_k (I_p ⊗ K) x (I_p ⊗ K)^† for operators acting on the trailing factor.
Matrix apply_kraus_last(const Matrix& x, std::size_t passive_dim, std::span<const Matrix> kraus);
Matrix conjugate_last(const Matrix& x, std::size_t passive_dim, const Matrix& op);
/// sum_k (K ⊗ I_t) x (K ⊗ I_t)^† for operators acting on the leading factor.
Matrix apply_kraus_first(const Matrix& x, std::size_t trailing_dim, std::span<const Matrix> kraus);

}  // namespace tensor

}  // namespace hsq
