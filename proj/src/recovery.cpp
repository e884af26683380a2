#include "hsq/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

#include "hsq/measures.hpp"

namespace hsq {

namespace {

int pow2(std::size_t n) { return 1 << n; }

Qubits concat(const Qubits& a, const Qubits& b) {
  Qubits q = a;
  q.insert(q.end(), b.begin(), b.end());
  return q;
}

std::vector<Matrix> daggers(const std::vector<Matrix>& ks) {
  std::vector<Matrix> out;
  out.reserve(ks.size());
  for (const Matrix& k : ks) out.push_back(k.adjoint());
  return out;
}

Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

/// Entropy of the marginal on `keep` of a three-factor operator.
double marginal_entropy(const Matrix& m, const Dims& dims, std::vector<int> keep) {
  if (keep.empty()) return 0.0;
  if (keep.size() == dims.size()) return entropy_bits(hermitian_part(m));
  return entropy_bits(hermitian_part(tensor::reduce(m, dims, keep)));
}

/// I(X;Z|Y) for an operator on X ⊗ Y ⊗ Z.
double qcmi_xyz(const Matrix& m, const Dims& dims) {
  return marginal_entropy(m, dims, {0, 1}) + marginal_entropy(m, dims, {1, 2}) -
         marginal_entropy(m, dims, {1}) - marginal_entropy(m, dims, {0, 1, 2});
}

}  // namespace

// ---------------------------------------------------------------------------
// Channel

Channel::Channel(std::vector<Matrix> kraus, std::string name)
    : kraus_(std::move(kraus)), name_(std::move(name)) {
  if (kraus_.empty()) throw std::invalid_argument("channel needs at least one Kraus operator");
  const Eigen::Index r = kraus_.front().rows(), c = kraus_.front().cols();
  if (r < 1 || c < 1) throw std::invalid_argument("empty Kraus operator");
  Matrix sum = Matrix::Zero(c, c);
  for (const Matrix& k : kraus_) {
    if (k.rows() != r || k.cols() != c) throw std::invalid_argument("Kraus operators differ in shape");
    sum += k.adjoint() * k;
  }
  if ((sum - Matrix::Identity(c, c)).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("Kraus operators are not trace preserving");
  }
}

Channel Channel::identity(int dim) {
  return Channel({Matrix::Identity(dim, dim)}, "identity");
}

Channel Channel::dephasing(double p) {
  if (p < 0 || p > 1) throw std::invalid_argument("dephasing strength outside [0, 1]");
  Matrix z = Matrix::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  return Channel({std::sqrt(1 - p) * Matrix::Identity(2, 2), std::sqrt(p) * z},
                 "dephasing(" + std::to_string(p) + ")");
}

Channel Channel::depolarizing(double p) {
  if (p < 0 || p > 1) throw std::invalid_argument("depolarizing strength outside [0, 1]");
  Matrix x = Matrix::Zero(2, 2), y = Matrix::Zero(2, 2), z = Matrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  y(0, 1) = cplx(0, -1);
  y(1, 0) = cplx(0, 1);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  return Channel({std::sqrt(1 - 0.75 * p) * Matrix::Identity(2, 2), std::sqrt(p / 4) * x,
                  std::sqrt(p / 4) * y, std::sqrt(p / 4) * z},
                 "depolarizing(" + std::to_string(p) + ")");
}

Channel Channel::complete_dephasing(int dim) {
  std::vector<Matrix> ks;
  for (int i = 0; i < dim; ++i) {
    Matrix k = Matrix::Zero(dim, dim);
    k(i, i) = 1.0;
    ks.push_back(std::move(k));
  }
  return Channel(std::move(ks), "complete_dephasing");
}

Channel Channel::trace_and_replace(int n_qubits) {
  const int d = pow2(static_cast<std::size_t>(n_qubits));
  std::vector<Matrix> ks;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Matrix k = Matrix::Zero(d, d);
      k(i, j) = 1.0 / std::sqrt(static_cast<double>(d));
      ks.push_back(std::move(k));
    }
  }
  return Channel(std::move(ks), "trace_and_replace");
}

Channel Channel::partial_trace_last(int keep_dim, int traced_dim) {
  std::vector<Matrix> ks;
  for (int c = 0; c < traced_dim; ++c) {
    Matrix k = Matrix::Zero(keep_dim, keep_dim * traced_dim);
    for (int b = 0; b < keep_dim; ++b) k(b, b * traced_dim + c) = 1.0;
    ks.push_back(std::move(k));
  }
  return Channel(std::move(ks), "partial_trace");
}

Channel Channel::tensor_power(const Channel& single, int n) {
  if (n < 1) throw std::invalid_argument("tensor_power needs n >= 1");
  std::vector<Matrix> ks = single.kraus();
  for (int i = 1; i < n; ++i) {
    std::vector<Matrix> next;
    for (const Matrix& a : ks) {
      for (const Matrix& b : single.kraus()) {
        Matrix ab = Eigen::kroneckerProduct(a, b);
        next.push_back(std::move(ab));
      }
    }
    ks = std::move(next);
  }
  return Channel(std::move(ks), single.name() + "^" + std::to_string(n));
}

Matrix Channel::apply(const Matrix& x) const { return tensor::apply_kraus_last(x, 1, kraus_); }

Matrix Channel::adjoint(const Matrix& y) const {
  const auto kd = daggers(kraus_);
  return tensor::apply_kraus_last(y, 1, kd);
}

DensityOp apply_channel(const DensityOp& rho, const Channel& channel, std::span<const int> qubits) {
  const int n = rho.n_qubits();
  const int dq = pow2(qubits.size());
  if (channel.in_dim() != dq || channel.out_dim() != dq) {
    throw std::invalid_argument("channel dimension does not match the target qubits");
  }
  std::vector<int> order = tensor::complement(n, qubits);
  const auto passive = static_cast<std::size_t>(pow2(order.size()));
  order.insert(order.end(), qubits.begin(), qubits.end());
  const Dims dims = rho.reg().dims();
  Matrix moved = tensor::permute(rho.matrix(), dims, order);
  moved = tensor::apply_kraus_last(moved, passive, channel.kraus());
  std::vector<int> inverse(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) inverse[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
  return DensityOp::trusted(hermitian_part(tensor::permute(moved, dims, inverse)));
}

// ---------------------------------------------------------------------------
// RecoveryMap

RecoveryMap::RecoveryMap(RecoveryKind kind, Matrix sigma, Channel channel)
    : kind_(kind), sigma_(std::move(sigma)), channel_(std::move(channel)) {
  if (sigma_.rows() != channel_.in_dim()) {
    throw std::invalid_argument("reference state does not match the channel input");
  }
  sigma_sqrt_ = mat_fn_on_support(hermitian_part(sigma_), MatFn::sqrt);
  out_inv_sqrt_ = mat_fn_on_support(hermitian_part(channel_.apply(sigma_)), MatFn::inv_sqrt);
}

int RecoveryMap::in_dim() const {
  return channel_.out_dim() * (c_projector_ ? static_cast<int>(c_projector_->rows()) : 1);
}

int RecoveryMap::out_dim() const {
  return channel_.in_dim() * (c_projector_ ? static_cast<int>(c_projector_->rows()) : 1);
}

Matrix RecoveryMap::apply_last(const Matrix& x, std::size_t passive_dim) const {
  const auto kd = daggers(channel_.kraus());
  auto core = [&](const Matrix& m, std::size_t passive) {
    Matrix y = tensor::conjugate_last(m, passive, out_inv_sqrt_);
    y = tensor::apply_kraus_last(y, passive, kd);
    return tensor::conjugate_last(y, passive, sigma_sqrt_);
  };
  if (!c_projector_) return core(x, passive_dim);

  const int p = static_cast<int>(passive_dim);
  const int dc = static_cast<int>(c_projector_->rows());
  const int order[3] = {0, 2, 1};
  Matrix moved = tensor::permute(x, Dims{p, channel_.out_dim(), dc}, order);
  moved = core(moved, passive_dim * static_cast<std::size_t>(dc));
  moved = tensor::permute(moved, Dims{p, dc, channel_.in_dim()}, order);
  return tensor::conjugate_last(moved, passive_dim * static_cast<std::size_t>(channel_.in_dim()),
                                *c_projector_);
}

Matrix RecoveryMap::apply(const Matrix& x) const { return apply_last(x, 1); }

Matrix RecoveryMap::choi() const {
  const int din = in_dim(), dout = out_dim();
  Matrix j = Matrix::Zero(din * dout, din * dout);
  for (int a = 0; a < din; ++a) {
    for (int b = 0; b < din; ++b) {
      Matrix e = Matrix::Zero(din, din);
      e(a, b) = 1.0;
      j.block(a * dout, b * dout, dout, dout) = apply(e);
    }
  }
  return j;
}

RecoveryMap petz_general(const Matrix& sigma, const Channel& channel) {
  return RecoveryMap(RecoveryKind::petz, sigma, channel);
}

RecoveryMap petz_general(const DensityOp& sigma, const Channel& channel) {
  return petz_general(sigma.matrix(), channel);
}

RecoveryMap petz_with_projector(const Matrix& sigma, const Channel& channel, const Matrix& rho_c) {
  RecoveryMap r(RecoveryKind::petz_with_projector, sigma, channel);
  r.c_projector_ = support_projector(hermitian_part(rho_c));
  return r;
}

RecoveryMap petz_map(const DensityOp& rho, const RegionPartition& part) {
  part.validate(rho.n_qubits());
  const Qubits bc = concat(part.b, part.c);
  const Matrix rho_bc = tensor::reduce(rho.matrix(), rho.reg().dims(), bc);
  return petz_general(rho_bc, Channel::partial_trace_last(pow2(part.b.size()), pow2(part.c.size())));
}

PetzRecovery petz_recover(const DensityOp& rho, const RegionPartition& part) {
  const RecoveryMap r = petz_map(rho, part);
  const Dims dims = rho.reg().dims();
  const Matrix rho_ab = tensor::reduce(rho.matrix(), dims, concat(part.a, part.b));
  const Matrix out = hermitian_part(r.apply_last(rho_ab, static_cast<std::size_t>(pow2(part.a.size()))));
  const Matrix target = tensor::reduce(rho.matrix(), dims, part.abc());
  return {DensityOp::trusted(out), DensityOp::trusted(target), fidelity(target, out),
          trace_distance(target, out), qcmi(rho, part).value};
}

// ---------------------------------------------------------------------------
// Recoverability under a channel on A

RecoverabilityReport recoverability_for(const DensityOp& rho, const RegionPartition& part,
                                        const Channel& channel, const ExtendedState& ext,
                                        std::string label) {
  part.validate(rho.n_qubits());
  ext.validate_against(rho);
  const int da = pow2(part.a.size());
  if (channel.in_dim() != da) throw std::invalid_argument("channel must act on region A");

  std::vector<int> order = concat(part.a, part.b);
  order.push_back(ext.e_index());
  order.insert(order.end(), part.c.begin(), part.c.end());
  const Matrix rho_abec = hermitian_part(tensor::reduce(ext.state, ext.dims(), order));

  const int dbe = pow2(part.b.size()) * ext.e_dim;
  const int dc = pow2(part.c.size());
  const int da_out = channel.out_dim();
  const Matrix out_abec = hermitian_part(tensor::apply_kraus_first(
      rho_abec, static_cast<std::size_t>(dbe * dc), channel.kraus()));

  RecoverabilityReport rep;
  rep.extension = std::move(label);
  rep.delta_qcmi = qcmi_xyz(rho_abec, {da, dbe, dc}) - qcmi_xyz(out_abec, {da_out, dbe, dc});

  std::vector<Matrix> lifted;
  for (const Matrix& k : channel.kraus()) {
    Matrix lk = Eigen::kroneckerProduct(k, Matrix::Identity(dbe, dbe));
    lifted.push_back(std::move(lk));
  }
  const Dims two{da * dbe, dc};
  const int keep0[1] = {0}, keep1[1] = {1};
  const Matrix sigma_abe = tensor::reduce(rho_abec, two, keep0);
  const Matrix rho_c = tensor::reduce(rho_abec, two, keep1);
  const RecoveryMap r = petz_with_projector(sigma_abe, Channel(std::move(lifted), channel.name()), rho_c);
  const Matrix recovered = hermitian_part(r.apply(out_abec));

  rep.fidelity = std::min(1.0, fidelity(rho_abec, recovered));
  rep.trace_distance = trace_distance(rho_abec, recovered);
  rep.bound_holds = rep.fidelity >= std::exp2(-rep.delta_qcmi) - 1e-9;
  const double sf = std::sqrt(rep.fidelity);
  rep.sandwich_holds = 1 - sf <= rep.trace_distance + 1e-8 &&
                       rep.trace_distance <= std::sqrt(std::max(0.0, 1 - rep.fidelity)) + 1e-8;
  return rep;
}

RecoverabilityResult recoverability_deficit(const DensityOp& rho, const RegionPartition& part,
                                            const Channel& channel,
                                            const std::vector<ExtendedState>& extra) {
  RecoverabilityResult res;
  res.per_extension.push_back(
      recoverability_for(rho, part, channel, as_extension(purify(rho)), "purification"));
  for (std::size_t i = 0; i < extra.size(); ++i) {
    res.per_extension.push_back(
        recoverability_for(rho, part, channel, extra[i], "extension " + std::to_string(i + 1)));
  }
  res.best_fidelity = -1;
  for (const auto& rep : res.per_extension) {
    if (rep.fidelity > res.best_fidelity) {
      res.best_fidelity = rep.fidelity;
      res.delta_qcmi = rep.delta_qcmi;
    }
    if (!rep.bound_holds) {
      res.findings.push_back(rep.extension + ": Petz fidelity " + std::to_string(rep.fidelity) +
                             " below 2^-delta with delta " + std::to_string(rep.delta_qcmi));
    }
    if (!rep.sandwich_holds) {
      res.findings.push_back(rep.extension + ": fidelity/trace-distance sandwich violated");
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Iterated recovery

Qubits IteratedRecovery::region_c(int i) const {
  if (i < 1 || i > k) throw std::out_of_range("no such copy of C");
  Qubits q(static_cast<std::size_t>(n_c));
  std::iota(q.begin(), q.end(), n_a + n_b + (i - 1) * n_c);
  return q;
}

DensityOp IteratedRecovery::marginal_ac(int i) const {
  Qubits keep(static_cast<std::size_t>(n_a));
  std::iota(keep.begin(), keep.end(), 0);
  const Qubits c = region_c(i);
  keep.insert(keep.end(), c.begin(), c.end());
  return partial_trace(state, keep);
}

IteratedRecovery iterate_recovery(const DensityOp& rho, const RegionPartition& part, int k,
                                  double iter_tol) {
  if (k < 1) throw std::invalid_argument("iterate_recovery needs k >= 1");
  const double cmi = qcmi(rho, part).value;
  if (cmi > iter_tol) {
    throw std::domain_error("iterate_recovery requires a Markov state; I(A;C|B) = " +
                            std::to_string(cmi));
  }
  IteratedRecovery out{DensityOp::maximally_mixed(1), static_cast<int>(part.a.size()),
                       static_cast<int>(part.b.size()), static_cast<int>(part.c.size()), k};
  if (out.n_a + out.n_b + k * out.n_c > kDefaultMaxQubits) {
    throw std::invalid_argument("iterated recovery exceeds the 12-qubit cap");
  }
  const RecoveryMap r = petz_map(rho, part);
  const int da = pow2(part.a.size()), db = pow2(part.b.size()), dc = pow2(part.c.size());

  // Layout [A, C_1..C_{i-1}, B] between steps.
  Matrix x = tensor::reduce(rho.matrix(), rho.reg().dims(), concat(part.a, part.b));
  std::size_t passive = static_cast<std::size_t>(da);
  for (int i = 1; i <= k; ++i) {
    x = r.apply_last(x, passive);
    Dims dims{da};
    for (int j = 1; j < i; ++j) dims.push_back(dc);
    dims.push_back(db);
    dims.push_back(dc);
    std::vector<int> order(dims.size());
    std::iota(order.begin(), order.end(), 0);
    std::swap(order[order.size() - 1], order[order.size() - 2]);
    x = tensor::permute(x, dims, order);
    passive *= static_cast<std::size_t>(dc);
  }
  Dims dims{da};
  for (int j = 0; j < k; ++j) dims.push_back(dc);
  dims.push_back(db);
  std::vector<int> order{0, k + 1};
  for (int j = 1; j <= k; ++j) order.push_back(j);
  out.state = DensityOp::trusted(hermitian_part(tensor::permute(x, dims, order)));
  return out;
}

}  // namespace hsq
