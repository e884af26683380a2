#include "hsq/qstate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hsq {

namespace {

int qubits_for_dim(std::size_t dim) {
  if (dim < 2 || !std::has_single_bit(dim)) {
    throw std::invalid_argument("dimension " + std::to_string(dim) + " is not a power of two");
  }
  return std::bit_width(dim) - 1;
}

void check_qubit_set(std::span<const int> qs, int n, const char* what) {
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int q : qs) {
    if (q < 0 || q >= n) {
      throw std::invalid_argument(std::string(what) + ": qubit " + std::to_string(q) +
                                  " outside register of " + std::to_string(n));
    }
    if (seen[static_cast<std::size_t>(q)]) {
      throw std::invalid_argument(std::string(what) + ": qubit " + std::to_string(q) +
                                  " listed twice");
    }
    seen[static_cast<std::size_t>(q)] = true;
  }
}

std::string join(const Qubits& qs) {
  std::string s;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(qs[i]);
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Register / RegionPartition

Register::Register(int n_qubits) : n_(n_qubits) {
  if (n_qubits < 1) throw std::invalid_argument("register needs at least one qubit");
  if (n_qubits > 30) throw std::invalid_argument("register too large");
}

Qubits Register::labels() const {
  Qubits l(static_cast<std::size_t>(n_));
  std::iota(l.begin(), l.end(), 0);
  return l;
}

RegionPartition RegionPartition::make(int n_qubits, Qubits a, Qubits b, Qubits c,
                                      std::optional<Qubits> d) {
  RegionPartition p{std::move(a), std::move(b), std::move(c), {}};
  if (d) {
    p.d = std::move(*d);
  } else {
    std::vector<bool> used(static_cast<std::size_t>(std::max(n_qubits, 0)), false);
    for (const Qubits* r : {&p.a, &p.b, &p.c}) {
      for (int q : *r) {
        if (q >= 0 && q < n_qubits) used[static_cast<std::size_t>(q)] = true;
      }
    }
    for (int q = 0; q < n_qubits; ++q) {
      if (!used[static_cast<std::size_t>(q)]) p.d.push_back(q);
    }
  }
  p.validate(n_qubits);
  return p;
}

void RegionPartition::validate(int n) const {
  if (a.empty() || c.empty()) throw std::invalid_argument("regions A and C must be nonempty");
  Qubits all;
  for (const Qubits* r : {&a, &b, &c, &d}) all.insert(all.end(), r->begin(), r->end());
  check_qubit_set(all, n, "partition");
  if (static_cast<int>(all.size()) != n) {
    throw std::invalid_argument("partition does not cover the register");
  }
}

int RegionPartition::n_qubits() const {
  return static_cast<int>(a.size() + b.size() + c.size() + d.size());
}

Qubits RegionPartition::abc() const {
  Qubits q = a;
  q.insert(q.end(), b.begin(), b.end());
  q.insert(q.end(), c.begin(), c.end());
  return q;
}

RegionPartition RegionPartition::parse(const std::string& text, int n_qubits) {
  Qubits regions[4];
  bool has_d = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq != 1) throw std::invalid_argument("bad partition item '" + item + "'");
    int slot = std::string("ABCD").find(static_cast<char>(std::toupper(item[0])));
    if (slot < 0 || slot > 3) throw std::invalid_argument("unknown region '" + item + "'");
    if (slot == 3) has_d = true;
    std::stringstream vs(item.substr(2));
    std::string v;
    while (std::getline(vs, v, ',')) {
      if (v.empty()) continue;
      std::size_t pos = 0;
      int q = std::stoi(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("bad qubit index '" + v + "'");
      regions[slot].push_back(q);
    }
  }
  return make(n_qubits, regions[0], regions[1], regions[2],
              has_d ? std::optional<Qubits>(regions[3]) : std::nullopt);
}

std::string RegionPartition::to_string() const {
  return "A=" + join(a) + ";B=" + join(b) + ";C=" + join(c) + ";D=" + join(d);
}

// ---------------------------------------------------------------------------
// States

PureState::PureState(Vector amplitudes)
    : amps_(std::move(amplitudes)), reg_(qubits_for_dim(static_cast<std::size_t>(amps_.size()))) {
  if (std::abs(amps_.squaredNorm() - 1.0) > 1e-10) {
    throw std::invalid_argument("pure state is not normalized");
  }
}

PureState PureState::normalized(Vector amplitudes) {
  double norm = amplitudes.norm();
  if (norm == 0.0) throw std::invalid_argument("cannot normalize the zero vector");
  return PureState(amplitudes / norm);
}

PureState PureState::basis(int n_qubits, std::size_t index) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(std::size_t{1} << n_qubits));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return PureState(std::move(v));
}

DensityOp::DensityOp(Matrix m, Unchecked)
    : m_(std::move(m)), reg_(qubits_for_dim(static_cast<std::size_t>(m_.rows()))) {}

DensityOp::DensityOp(Matrix m) : DensityOp(std::move(m), Unchecked{}) {
  if (m_.rows() != m_.cols()) throw std::invalid_argument("density operator must be square");
  if (reg_.n_qubits() > kDefaultMaxQubits) {
    throw std::invalid_argument("density operators are capped at 12 qubits");
  }
  if (!is_hermitian(m_, 1e-10)) throw std::invalid_argument("density operator is not Hermitian");
  Matrix h = 0.5 * (m_ + m_.adjoint());
  m_ = std::move(h);
  if (std::abs(m_.trace().real() - 1.0) > 1e-9) {
    throw std::invalid_argument("density operator trace differs from 1");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument("density operator has a negative eigenvalue");
  }
}

DensityOp::DensityOp(const PureState& psi)
    : DensityOp(psi.amplitudes() * psi.amplitudes().adjoint(), Unchecked{}) {}

DensityOp DensityOp::maximally_mixed(int n_qubits) {
  auto d = static_cast<Eigen::Index>(std::size_t{1} << n_qubits);
  return DensityOp(Matrix::Identity(d, d) / static_cast<double>(d), Unchecked{});
}

DensityOp DensityOp::trusted(Matrix m) { return DensityOp(std::move(m), Unchecked{}); }

double DensityOp::purity() const { return (m_.adjoint() * m_).trace().real(); }

// ---------------------------------------------------------------------------
// Spectral tools

bool is_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

SpectralDecomp eigh(const Matrix& h) {
  if (!is_hermitian(h, 1e-10)) throw std::invalid_argument("eigh: input is not Hermitian");
  Matrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigh: eigensolver failed");
  const Eigen::Index n = sym.rows();
  SpectralDecomp out;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.eigenvalues(i) > kRankTol) ++out.rank;
  }
  return out;
}

Matrix mat_fn_on_support(const Matrix& h, MatFn fn) {
  SpectralDecomp sd = eigh(h);
  const Eigen::Index n = h.rows();
  RealVector f = RealVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double l = sd.eigenvalues(i);
    if (l <= kRankTol) continue;
    switch (fn) {
      case MatFn::sqrt: f(i) = std::sqrt(l); break;
      case MatFn::inv_sqrt: f(i) = 1.0 / std::sqrt(l); break;
      case MatFn::log: f(i) = std::log2(l); break;
    }
  }
  return sd.eigenvectors * f.asDiagonal() * sd.eigenvectors.adjoint();
}

Matrix support_projector(const Matrix& h) {
  SpectralDecomp sd = eigh(h);
  const Eigen::Index r = sd.rank;
  Matrix v = sd.eigenvectors.leftCols(r);
  return v * v.adjoint();
}

double trace_norm(const Matrix& m) {
  if (is_hermitian(m, 1e-12)) {
    Matrix sym = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
  }
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("trace_distance: dimension mismatch");
  }
  return 0.5 * trace_norm(a - b);
}

// ---------------------------------------------------------------------------
// Composite operations

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace

DensityOp tensor_product(const DensityOp& a, const DensityOp& b, int max_qubits) {
  if (a.n_qubits() + b.n_qubits() > max_qubits) {
    throw std::invalid_argument("tensor_product: result exceeds " + std::to_string(max_qubits) +
                                " qubits");
  }
  return DensityOp::trusted(kron(a.matrix(), b.matrix()));
}

PureState tensor_product(const PureState& a, const PureState& b, int max_qubits) {
  if (a.n_qubits() + b.n_qubits() > max_qubits) {
    throw std::invalid_argument("tensor_product: result exceeds " + std::to_string(max_qubits) +
                                " qubits");
  }
  Vector v(a.amplitudes().size() * b.amplitudes().size());
  for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i) {
    v.segment(i * b.amplitudes().size(), b.amplitudes().size()) = a.amplitudes()(i) * b.amplitudes();
  }
  return PureState(std::move(v));
}

DensityOp partial_trace(const DensityOp& rho, std::span<const int> keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
  check_qubit_set(keep, rho.n_qubits(), "partial_trace");
  return DensityOp::trusted(tensor::reduce(rho.matrix(), rho.reg().dims(), keep));
}

DensityOp partial_trace(const PureState& psi, std::span<const int> keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
  check_qubit_set(keep, psi.n_qubits(), "partial_trace");
  return DensityOp::trusted(tensor::reduce_pure(psi.amplitudes(), psi.reg().dims(), keep));
}

Matrix partial_transpose(const DensityOp& rho, std::span<const int> region) {
  check_qubit_set(region, rho.n_qubits(), "partial_transpose");
  return tensor::partial_transpose(rho.matrix(), rho.reg().dims(), region);
}

Dims Purification::dims() const {
  Dims d(static_cast<std::size_t>(n_system_qubits), 2);
  d.push_back(purifier_dim);
  return d;
}

DensityOp Purification::system_state() const {
  Qubits keep(static_cast<std::size_t>(n_system_qubits));
  std::iota(keep.begin(), keep.end(), 0);
  return DensityOp::trusted(tensor::reduce_pure(amplitudes, dims(), keep));
}

Purification purify(const DensityOp& rho) {
  SpectralDecomp sd = eigh(rho.matrix());
  const int r = std::max(sd.rank, 1);
  const Eigen::Index d = rho.matrix().rows();
  Purification p;
  p.n_system_qubits = rho.n_qubits();
  p.purifier_dim = r;
  p.amplitudes = Vector::Zero(d * r);
  double norm2 = 0.0;
  for (int k = 0; k < r; ++k) norm2 += std::max(sd.eigenvalues(k), 0.0);
  for (int k = 0; k < r; ++k) {
    double w = std::sqrt(std::max(sd.eigenvalues(k), 0.0) / norm2);
    for (Eigen::Index s = 0; s < d; ++s) p.amplitudes(s * r + k) = w * sd.eigenvectors(s, k);
  }
  return p;
}

Dims ExtendedState::dims() const {
  Dims d(static_cast<std::size_t>(n_qubits), 2);
  d.push_back(e_dim);
  return d;
}

Matrix ExtendedState::system_marginal() const {
  Qubits keep(static_cast<std::size_t>(n_qubits));
  std::iota(keep.begin(), keep.end(), 0);
  return tensor::reduce(state, dims(), keep);
}

void ExtendedState::validate_against(const DensityOp& rho, double tol) const {
  if (n_qubits != rho.n_qubits()) throw std::invalid_argument("extension register mismatch");
  if (e_dim < 1) throw std::invalid_argument("extension dimension must be positive");
  const auto d = static_cast<Eigen::Index>(tensor::total_dim(dims()));
  if (state.rows() != d || state.cols() != d) {
    throw std::invalid_argument("extension state has the wrong dimension");
  }
  if (!is_hermitian(state, 1e-10)) throw std::invalid_argument("extension state is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (state + state.adjoint()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument("extension state is not positive semidefinite");
  }
  if (trace_distance(system_marginal(), rho.matrix()) > tol) {
    throw std::invalid_argument("extension does not reproduce the state");
  }
}

ExtendedState as_extension(const Purification& p) {
  return {p.amplitudes * p.amplitudes.adjoint(), p.n_system_qubits, p.purifier_dim};
}

// ---------------------------------------------------------------------------
// Mixed-radix tensor helpers

namespace tensor {

std::size_t total_dim(const Dims& dims) {
  std::size_t d = 1;
  for (int x : dims) d *= static_cast<std::size_t>(x);
  return d;
}

std::vector<std::size_t> offsets(const Dims& dims, std::span<const int> subsystems) {
  std::vector<std::size_t> stride(dims.size());
  std::size_t s = 1;
  for (std::size_t k = dims.size(); k-- > 0;) {
    stride[k] = s;
    s *= static_cast<std::size_t>(dims[k]);
  }
  std::vector<std::size_t> out{0};
  for (int sub : subsystems) {
    const auto idx = static_cast<std::size_t>(sub);
    std::vector<std::size_t> next;
    next.reserve(out.size() * static_cast<std::size_t>(dims[idx]));
    for (std::size_t o : out) {
      for (int digit = 0; digit < dims[idx]; ++digit) {
        next.push_back(o + static_cast<std::size_t>(digit) * stride[idx]);
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<int> complement(int n_subsystems, std::span<const int> subsystems) {
  std::vector<bool> in(static_cast<std::size_t>(n_subsystems), false);
  for (int s : subsystems) in[static_cast<std::size_t>(s)] = true;
  std::vector<int> out;
  for (int s = 0; s < n_subsystems; ++s) {
    if (!in[static_cast<std::size_t>(s)]) out.push_back(s);
  }
  return out;
}

Matrix reduce(const Matrix& rho, const Dims& dims, std::span<const int> keep) {
  const auto rest = complement(static_cast<int>(dims.size()), keep);
  const auto ko = offsets(dims, keep);
  const auto to = offsets(dims, rest);
  const auto dk = static_cast<Eigen::Index>(ko.size());
  Matrix out = Matrix::Zero(dk, dk);
  for (Eigen::Index r = 0; r < dk; ++r) {
    for (Eigen::Index c = 0; c < dk; ++c) {
      cplx acc = 0.0;
      const std::size_t br = ko[static_cast<std::size_t>(r)];
      const std::size_t bc = ko[static_cast<std::size_t>(c)];
      for (std::size_t t : to) {
        acc += rho(static_cast<Eigen::Index>(br + t), static_cast<Eigen::Index>(bc + t));
      }
      out(r, c) = acc;
    }
  }
  return out;
}

Matrix split(const Vector& psi, const Dims& dims, std::span<const int> keep) {
  const auto rest = complement(static_cast<int>(dims.size()), keep);
  const auto ko = offsets(dims, keep);
  const auto to = offsets(dims, rest);
  Matrix m(static_cast<Eigen::Index>(ko.size()), static_cast<Eigen::Index>(to.size()));
  for (std::size_t t = 0; t < to.size(); ++t) {
    for (std::size_t r = 0; r < ko.size(); ++r) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) =
          psi(static_cast<Eigen::Index>(ko[r] + to[t]));
    }
  }
  return m;
}

Matrix reduce_pure(const Vector& psi, const Dims& dims, std::span<const int> keep) {
  Matrix m = split(psi, dims, keep);
  return m * m.adjoint();
}

Dims permuted_dims(const Dims& dims, std::span<const int> order) {
  Dims out;
  out.reserve(order.size());
  for (int o : order) out.push_back(dims[static_cast<std::size_t>(o)]);
  return out;
}

Matrix permute(const Matrix& m, const Dims& dims, std::span<const int> order) {
  if (order.size() != dims.size()) throw std::invalid_argument("permute: order size mismatch");
  const auto map = offsets(dims, order);
  const auto d = static_cast<Eigen::Index>(map.size());
  Matrix out(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      out(i, j) = m(static_cast<Eigen::Index>(map[static_cast<std::size_t>(i)]),
                    static_cast<Eigen::Index>(map[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

Vector permute(const Vector& v, const Dims& dims, std::span<const int> order) {
  if (order.size() != dims.size()) throw std::invalid_argument("permute: order size mismatch");
  const auto map = offsets(dims, order);
  Vector out(static_cast<Eigen::Index>(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(map[i]));
  }
  return out;
}

Matrix partial_transpose(const Matrix& m, const Dims& dims, std::span<const int> targets) {
  const auto rest = complement(static_cast<int>(dims.size()), targets);
  const auto ro = offsets(dims, rest);
  const auto to = offsets(dims, targets);
  Matrix out(m.rows(), m.cols());
  for (std::size_t a : ro) {
    for (std::size_t b : ro) {
      for (std::size_t x : to) {
        for (std::size_t y : to) {
          out(static_cast<Eigen::Index>(a + x), static_cast<Eigen::Index>(b + y)) =
              m(static_cast<Eigen::Index>(a + y), static_cast<Eigen::Index>(b + x));
        }
      }
    }
  }
  return out;
}

Matrix apply_kraus_last(const Matrix& x, std::size_t passive_dim, std::span<const Matrix> kraus) {
  if (kraus.empty()) throw std::invalid_argument("apply_kraus_last: no Kraus operators");
  const Eigen::Index din = kraus.front().cols();
  const Eigen::Index dout = kraus.front().rows();
  const auto dp = static_cast<Eigen::Index>(passive_dim);
  if (x.rows() != dp * din || x.cols() != dp * din) {
    throw std::invalid_argument("apply_kraus_last: operator dimension mismatch");
  }
  Matrix out = Matrix::Zero(dp * dout, dp * dout);
  for (const Matrix& k : kraus) {
    Matrix kx(dp * dout, dp * din);
    for (Eigen::Index p = 0; p < dp; ++p) {
      kx.middleRows(p * dout, dout) = k * x.middleRows(p * din, din);
    }
    for (Eigen::Index q = 0; q < dp; ++q) {
      out.middleCols(q * dout, dout) += kx.middleCols(q * din, din) * k.adjoint();
    }
  }
  return out;
}

Matrix conjugate_last(const Matrix& x, std::size_t passive_dim, const Matrix& op) {
  return apply_kraus_last(x, passive_dim, std::span<const Matrix>(&op, 1));
}

Matrix apply_kraus_first(const Matrix& x, std::size_t trailing_dim, std::span<const Matrix> kraus) {
  if (kraus.empty()) throw std::invalid_argument("apply_kraus_first: no Kraus operators");
  const Eigen::Index din = kraus.front().cols();
  const Eigen::Index dout = kraus.front().rows();
  const auto t = static_cast<Eigen::Index>(trailing_dim);
  if (x.rows() != din * t || x.cols() != din * t) {
    throw std::invalid_argument("apply_kraus_first: operator dimension mismatch");
  }
  Matrix out = Matrix::Zero(dout * t, dout * t);
  for (const Matrix& k : kraus) {
    // (K ⊗ I) x, then right-multiply by (K ⊗ I)^†.
    Matrix kx = Matrix::Zero(dout * t, din * t);
    for (Eigen::Index a = 0; a < dout; ++a) {
      for (Eigen::Index i = 0; i < din; ++i) {
        if (k(a, i) != cplx(0.0)) kx.middleRows(a * t, t) += k(a, i) * x.middleRows(i * t, t);
      }
    }
    for (Eigen::Index b = 0; b < dout; ++b) {
      for (Eigen::Index j = 0; j < din; ++j) {
        if (k(b, j) != cplx(0.0)) out.middleCols(b * t, t) += std::conj(k(b, j)) * kx.middleCols(j * t, t);
      }
    }
  }
  return out;
}

}  // namespace tensor

}  // namespace hsq
