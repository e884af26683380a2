#pragma once

#include <span>
#include <vector>

#include "hsq/qstate.hpp"

namespace hsq {

enum class MeasureKind { entropy, qmi, qcmi, tmi, negativity, tau3, fidelity, trace_distance };

/// A correlation measure in bits.
struct MeasureValue {
  double value = 0.0;
  MeasureKind kind = MeasureKind::entropy;

  operator double() const { return value; }
};

/// -sum p log2 p over eigenvalues clipped to [0, 1]; 0 log 0 = 0.
double entropy_of_spectrum(const RealVector& eigenvalues);
/// Von Neumann entropy of a Hermitian PSD matrix, in bits.
double entropy_bits(const Matrix& rho);
/// Entropy of the `keep` marginal of a pure vector, via the smaller Gram matrix.
double entropy_of_pure_marginal(const Vector& psi, const Dims& dims, std::span<const int> keep);

MeasureValue entropy(const DensityOp& rho);
double binary_entropy(double p);

MeasureValue qmi(const DensityOp& rho, std::span<const int> a, std::span<const int> c);
/// I(A;C|B) with D traced out first.
MeasureValue qcmi(const DensityOp& rho, const RegionPartition& part);
MeasureValue qcmi(const PureState& psi, const RegionPartition& part);
MeasureValue tmi(const DensityOp& rho, const RegionPartition& part);
MeasureValue negativity(const DensityOp& rho, std::span<const int> region);
MeasureValue tau3(const DensityOp& rho, const RegionPartition& part);

double fidelity(const Matrix& rho, const Matrix& sigma);
double fidelity(const DensityOp& rho, const DensityOp& sigma);
double trace_distance(const DensityOp& rho, const DensityOp& sigma);
/// D(rho||sigma) in bits; +infinity when supp(rho) is not inside supp(sigma).
double relative_entropy(const Matrix& rho, const Matrix& sigma);

/// f(d, eps) = 2 sqrt(eps) log d + (1 + 2 sqrt(eps)) h2(2 sqrt(eps) / (1 + 2 sqrt(eps))).
double continuity_bound(int d, double eps);

PureState make_ghz(int n);
PureState make_w(int n);
/// 2 h2(2/n) - h2(1/n) - h2(3/n): I(A;C|B) of W_n with single-qubit A, B, C.
double table1_closed_form(int n);

/// I(A;C|B) of pure states on a fixed register, reusing the index tables.
class PureQcmi {
public:
  PureQcmi(int n_qubits, const RegionPartition& part);
  /// Mixed-radix version; a, b, c are disjoint subsystem indices, the rest is traced.
  PureQcmi(const Dims& dims, const Qubits& a, const Qubits& b, const Qubits& c);
  double operator()(const Vector& psi) const;

private:
  struct Cut {
    std::vector<std::size_t> keep, rest;
  };
  static Cut make_cut(const Dims& dims, const Qubits& keep);
  static double entropy(const Vector& psi, const Cut& cut);

  Cut ab_, bc_, b_, abc_;
  bool b_empty_;
};

}  // namespace hsq
