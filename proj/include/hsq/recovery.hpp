#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hsq/qstate.hpp"

namespace hsq {

/// Completely positive trace-preserving map given by Kraus operators (all out_dim x in_dim).
class Channel {
public:
  /// Throws unless sum K^† K = I within 1e-9.
  explicit Channel(std::vector<Matrix> kraus, std::string name = "channel");

  static Channel identity(int dim);
  /// rho -> (1-p) rho + p Z rho Z on one qubit.
  static Channel dephasing(double p);
  /// rho -> (1-p) rho + p I/2 on one qubit.
  static Channel depolarizing(double p);
  /// Completely dephases in the computational basis of `dim` levels.
  static Channel complete_dephasing(int dim);
  /// rho -> tr(rho) I/d on `n_qubits` qubits.
  static Channel trace_and_replace(int n_qubits);
  /// Traces out the trailing factor of keep_dim x traced_dim.
  static Channel partial_trace_last(int keep_dim, int traced_dim);

  const std::vector<Matrix>& kraus() const { return kraus_; }
  const std::string& name() const { return name_; }
  int in_dim() const { return static_cast<int>(kraus_.front().cols()); }
  int out_dim() const { return static_cast<int>(kraus_.front().rows()); }

  Matrix apply(const Matrix& x) const;
  /// Heisenberg-picture map sum K^† y K.
  Matrix adjoint(const Matrix& y) const;
  /// Channel ⊗ single-qubit copies, for acting on n independent qubits.
  static Channel tensor_power(const Channel& single, int n);

private:
  std::vector<Matrix> kraus_;
  std::string name_;
};

/// Applies a dimension-preserving channel to the listed qubits of rho (listed order = channel order).
DensityOp apply_channel(const DensityOp& rho, const Channel& channel, std::span<const int> qubits);

enum class RecoveryKind { petz, petz_with_projector };

/// X -> sigma^{1/2} N^†(N(sigma)^{-1/2} X N(sigma)^{-1/2}) sigma^{1/2}, optionally followed by a
/// trailing reference factor conjugated with its support projector.
class RecoveryMap {
public:
  RecoveryKind kind() const { return kind_; }
  const Matrix& reference() const { return sigma_; }
  const Channel& channel() const { return channel_; }
  /// Dimension of the system the map acts on (the channel's output, times the C factor).
  int in_dim() const;
  int out_dim() const;

  Matrix apply(const Matrix& x) const;
  /// Acts on the trailing factor of passive_dim x in_dim().
  Matrix apply_last(const Matrix& x, std::size_t passive_dim) const;
  /// sum_ij |i><j| ⊗ R(|i><j|), input index most significant.
  Matrix choi() const;

  friend RecoveryMap petz_general(const Matrix& sigma, const Channel& channel);
  friend RecoveryMap petz_with_projector(const Matrix& sigma, const Channel& channel,
                                         const Matrix& rho_c);

private:
  RecoveryMap(RecoveryKind kind, Matrix sigma, Channel channel);

  RecoveryKind kind_;
  Matrix sigma_;
  Channel channel_;
  Matrix sigma_sqrt_;
  Matrix out_inv_sqrt_;
  std::optional<Matrix> c_projector_;
};

RecoveryMap petz_general(const Matrix& sigma, const Channel& channel);
RecoveryMap petz_general(const DensityOp& sigma, const Channel& channel);
/// Reference sigma ⊗ rho_c with the channel acting on the sigma factor; C passes through
/// conjugated by the support projector of rho_c.
RecoveryMap petz_with_projector(const Matrix& sigma, const Channel& channel, const Matrix& rho_c);

/// B -> BC Petz map for rho_ABC (reference rho_BC, channel tr_C). Input order [B], output [B, C].
RecoveryMap petz_map(const DensityOp& rho, const RegionPartition& part);

struct PetzRecovery {
  DensityOp recovered;  // qubit order A, B, C
  DensityOp target;     // rho_ABC in the same order
  double fidelity = 0;
  double trace_distance = 0;
  double qcmi = 0;
};
PetzRecovery petz_recover(const DensityOp& rho, const RegionPartition& part);

struct RecoverabilityReport {
  std::string extension;
  double delta_qcmi = 0;
  double fidelity = 0;
  double trace_distance = 0;
  /// F >= 2^-delta for the plain Petz map (not guaranteed; a failure is a finding).
  bool bound_holds = false;
  /// 1 - sqrt(F) <= TD <= sqrt(1 - F).
  bool sandwich_holds = false;
};

struct RecoverabilityResult {
  std::vector<RecoverabilityReport> per_extension;
  double best_fidelity = 0;
  /// delta of the extension achieving best_fidelity.
  double delta_qcmi = 0;
  std::vector<std::string> findings;
};

/// Reverses `channel` acting on region A for each extension (purification first, then `extra`).
RecoverabilityResult recoverability_deficit(const DensityOp& rho, const RegionPartition& part,
                                            const Channel& channel,
                                            const std::vector<ExtendedState>& extra = {});
RecoverabilityReport recoverability_for(const DensityOp& rho, const RegionPartition& part,
                                        const Channel& channel, const ExtendedState& ext,
                                        std::string label);

struct IteratedRecovery {
  DensityOp state;  // qubit order A, B, C_1, ..., C_k
  int n_a = 0, n_b = 0, n_c = 0, k = 0;

  Qubits region_c(int i) const;  // i in 1..k
  DensityOp marginal_ac(int i) const;
};

/// Applies the B -> BC Petz map k times to rho_AB. Requires qcmi(rho) <= iter_tol.
IteratedRecovery iterate_recovery(const DensityOp& rho, const RegionPartition& part, int k,
                                  double iter_tol = 1e-6);

}  // namespace hsq
