#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hsq/qstate.hpp"

namespace hsq {

enum class AnsatzOrigin { trivial, purification, classical_flag, random, user };

const char* to_string(AnsatzOrigin o);

/// Extension of rho = K K^† given by an isometry V from the frame space P (dim r) into E ⊗ F:
/// |Psi> = sum_k K|k> ⊗ V|k> on system ⊗ E ⊗ F, and the extension is tr_F |Psi><Psi|.
struct ExtensionAnsatz {
  Matrix frame;     // system x r
  Matrix isometry;  // (e_dim * f_dim) x r
  int e_dim = 1;
  int f_dim = 1;
  AnsatzOrigin origin = AnsatzOrigin::trivial;
  RealVector params;  // chart coordinates when produced by the optimizer

  int n_qubits() const;
  Dims joint_dims() const;  // [2, ..., 2, e_dim, f_dim]
  Vector joint_vector() const;
  ExtendedState materialize() const;
  /// Throws unless V^†V = I within 1e-8 and the extension reproduces rho within `tol`.
  void validate(const DensityOp& rho, double tol = 1e-8) const;
};

/// Pure-state decomposition rho = sum_i p_i |psi_i><psi_i|.
struct EnsembleDecomp {
  std::vector<double> weights;
  std::vector<Vector> states;

  /// Throws unless weights are a probability vector, states are unit vectors, and the
  /// ensemble reproduces rho within `tol` trace distance.
  void validate(const DensityOp& rho, double tol = 1e-8) const;
  Matrix reconstruct() const;
  static EnsembleDecomp eigen(const DensityOp& rho);
  /// sum_x p_x (decomposition_x), weights rescaled.
  static EnsembleDecomp merge(const std::vector<std::pair<double, EnsembleDecomp>>& parts);
  /// Flag extension sum_i p_i psi_i ⊗ |i><i|_E.
  ExtendedState flag_extension() const;
};

enum class BoundKind {
  exact_pure,
  half_qcmi_trivial,
  half_qcmi_given_D,
  classical_flag,
  convex_roof,
  variational
};

const char* to_string(BoundKind k);

using Certificate = std::variant<ExtensionAnsatz, EnsembleDecomp>;

struct Candidate {
  std::string label;
  double value = 0;
};

/// Certified upper bound: value is 1/2 I(A;C|BE) at the extension recorded in `certificate`.
struct BoundReport {
  double value = 0;
  BoundKind kind = BoundKind::half_qcmi_trivial;
  Certificate certificate;
  /// Register and partition the certificate lives on (a marginal for E_sq / N_sq).
  RegionPartition part;
  /// Original qubit label of each certificate qubit.
  Qubits qubit_map;
  int restarts_used = 0;
  bool converged = true;
  std::vector<Candidate> candidates;
  std::vector<std::string> notes;
};

struct SquashOptions {
  int restarts = 8;
  int m_max = 0;  // 0: twice the rank
  int rank_cap = 16;
  int e_dim = 0;  // 0: rank, reduced to respect max_joint_qubits
  int f_dim = 0;
  int max_joint_qubits = 10;
  int max_variational_qubits = 6;
  double tol = 1e-7;
  int window = 50;
  int max_evals = 4000;
  double initial_step = 0.4;
  std::uint64_t seed = 1;
  bool variational = true;
  bool use_coqcmi = true;
  int threads = 1;
  /// Extensions of the input state (over its full register ⊗ E), evaluated and used as seeds.
  std::vector<ExtendedState> hints;
  /// Decompositions of the input state used to seed co(QCMI).
  std::vector<EnsembleDecomp> seed_decomps;
};

/// 1/2 I(A;C|BE) of an ansatz; `part` refers to the ansatz's qubits, E is conditioned on.
double evaluate_ansatz(const ExtensionAnsatz& ansatz, const RegionPartition& part);
/// 1/2 I(A;C|BE) of an explicit extension.
double evaluate_extension(const ExtendedState& ext, const RegionPartition& part);
/// Re-evaluates a report from its certificate alone.
double reevaluate(const BoundReport& report);

BoundReport tsq_pure(const PureState& psi, const RegionPartition& part);
BoundReport classical_flag_bound(const EnsembleDecomp& decomp, const RegionPartition& part);
BoundReport coqcmi(const DensityOp& rho, const RegionPartition& part, const SquashOptions& opts = {});
BoundReport tsq_upper(const DensityOp& rho, const RegionPartition& part, const SquashOptions& opts = {});
/// Variational search alone; throws above opts.max_variational_qubits.
BoundReport tsq_variational(const DensityOp& rho, const RegionPartition& part,
                            const SquashOptions& opts = {});
/// Upper bound on N_sq(A;C|B) of the ABC marginal. Hints are extensions of the full input.
BoundReport nsq_upper(const DensityOp& rho, const RegionPartition& part, const SquashOptions& opts = {});
/// Upper bound on E_sq(A;C) of the AC marginal. Hints are extensions of the full input.
BoundReport esq_upper(const DensityOp& rho, const RegionPartition& part, const SquashOptions& opts = {});

/// Explicit extension of the input state realized by a report's certificate (qubits in
/// qubit_map order, then E).
ExtendedState materialize(const BoundReport& report);

struct HierarchyReport {
  double esq = 0, nsq = 0, tsq = 0, half_i_acd = 0;
  bool tsq_below_half_i_acd = false;  // tsq <= 1/2 I(A;C|D) + 1e-9
  bool nsq_below_tsq = false;         // nsq <= tsq + 1e-2 with the T_sq certificate injected
};
HierarchyReport hierarchy_check(const DensityOp& rho, const RegionPartition& part,
                                const SquashOptions& opts = {});

/// T(A1A2;C|B) - T(A1;C|B) - T(A2;C|B) from upper bounds; A2 joins D in the reduced terms.
struct MonogamyDiagnostic {
  double joint = 0, first = 0, second = 0, difference = 0;
  std::string note;
};
MonogamyDiagnostic monogamy_diagnostic(const DensityOp& rho, const RegionPartition& part,
                                       const Qubits& a1, const Qubits& a2,
                                       const SquashOptions& opts = {});

}  // namespace hsq
