#include "hsq/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hsq {

namespace {

Qubits concat(std::initializer_list<const Qubits*> parts) {
  Qubits out;
  for (const Qubits* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

Qubits iota_qubits(std::size_t n, int start = 0) {
  Qubits q(n);
  std::iota(q.begin(), q.end(), start);
  return q;
}

double gram_entropy(const Matrix& m) {
  Matrix g = (m.rows() <= m.cols()) ? Matrix(m * m.adjoint()) : Matrix(m.adjoint() * m);
  if (g.rows() == 1) return entropy_of_spectrum(RealVector::Constant(1, g(0, 0).real()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return entropy_of_spectrum(es.eigenvalues());
}

}  // namespace

double entropy_of_spectrum(const RealVector& eigenvalues) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    double p = std::clamp(eigenvalues(i), 0.0, 1.0);
    if (p > 0.0) s -= p * std::log2(p);
  }
  return s;
}

double entropy_bits(const Matrix& rho) {
  if (rho.rows() == 0) return 0.0;
  Matrix sym = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return entropy_of_spectrum(es.eigenvalues());
}

double entropy_of_pure_marginal(const Vector& psi, const Dims& dims, std::span<const int> keep) {
  if (keep.empty() || keep.size() == dims.size()) return 0.0;
  return gram_entropy(tensor::split(psi, dims, keep));
}

MeasureValue entropy(const DensityOp& rho) {
  return {entropy_bits(rho.matrix()), MeasureKind::entropy};
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binary_entropy: p outside [0, 1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

MeasureValue qmi(const DensityOp& rho, std::span<const int> a, std::span<const int> c) {
  Qubits ac(a.begin(), a.end());
  ac.insert(ac.end(), c.begin(), c.end());
  DensityOp rac = partial_trace(rho, ac);
  const auto na = a.size();
  const Qubits la = iota_qubits(na);
  const Qubits lc = iota_qubits(c.size(), static_cast<int>(na));
  const Dims dims = rac.reg().dims();
  double s = entropy_bits(tensor::reduce(rac.matrix(), dims, la)) +
             entropy_bits(tensor::reduce(rac.matrix(), dims, lc)) - entropy_bits(rac.matrix());
  return {s, MeasureKind::qmi};
}

MeasureValue qcmi(const DensityOp& rho, const RegionPartition& part) {
  part.validate(rho.n_qubits());
  const Qubits abc = part.abc();
  DensityOp r = partial_trace(rho, abc);
  const Dims dims = r.reg().dims();
  const auto na = part.a.size(), nb = part.b.size(), nc = part.c.size();
  const Qubits ab = iota_qubits(na + nb);
  const Qubits b = iota_qubits(nb, static_cast<int>(na));
  const Qubits bc = iota_qubits(nb + nc, static_cast<int>(na));
  auto s = [&](const Qubits& keep) {
    return keep.empty() ? 0.0 : entropy_bits(tensor::reduce(r.matrix(), dims, keep));
  };
  double v = s(ab) + s(bc) - s(b) - entropy_bits(r.matrix());
  return {v, MeasureKind::qcmi};
}

MeasureValue qcmi(const PureState& psi, const RegionPartition& part) {
  part.validate(psi.n_qubits());
  return {PureQcmi(psi.n_qubits(), part)(psi.amplitudes()), MeasureKind::qcmi};
}

MeasureValue tmi(const DensityOp& rho, const RegionPartition& part) {
  part.validate(rho.n_qubits());
  DensityOp r = partial_trace(rho, part.abc());
  const Dims dims = r.reg().dims();
  const auto na = part.a.size(), nb = part.b.size(), nc = part.c.size();
  const Qubits a = iota_qubits(na);
  const Qubits b = iota_qubits(nb, static_cast<int>(na));
  const Qubits c = iota_qubits(nc, static_cast<int>(na + nb));
  auto s = [&](const Qubits& keep) {
    return keep.empty() ? 0.0 : entropy_bits(tensor::reduce(r.matrix(), dims, keep));
  };
  double v = s(a) + s(b) + s(c) - s(concat({&a, &b})) - s(concat({&b, &c})) -
             s(concat({&a, &c})) + entropy_bits(r.matrix());
  return {v, MeasureKind::tmi};
}

MeasureValue negativity(const DensityOp& rho, std::span<const int> region) {
  Matrix pt = partial_transpose(rho, region);
  return {(trace_norm(pt) - 1.0) / 2.0, MeasureKind::negativity};
}

MeasureValue tau3(const DensityOp& rho, const RegionPartition& part) {
  part.validate(rho.n_qubits());
  DensityOp r = partial_trace(rho, part.abc());
  const auto na = part.a.size(), nb = part.b.size(), nc = part.c.size();
  if (nb == 0) throw std::invalid_argument("tau3 needs a nonempty region B");
  const Qubits regions[3] = {iota_qubits(na), iota_qubits(nb, static_cast<int>(na)),
                             iota_qubits(nc, static_cast<int>(na + nb))};
  double prod = 1.0;
  for (const Qubits& reg : regions) {
    double n = negativity(r, reg);
    if (n < 1e-12) return {0.0, MeasureKind::tau3};
    prod *= n;
  }
  return {std::cbrt(prod), MeasureKind::tau3};
}

double fidelity(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) {
    throw std::invalid_argument("fidelity: dimension mismatch");
  }
  Matrix prod = mat_fn_on_support(rho, MatFn::sqrt) * mat_fn_on_support(sigma, MatFn::sqrt);
  Eigen::BDCSVD<Matrix> svd(prod);
  double f = svd.singularValues().sum();
  return std::clamp(f * f, 0.0, 1.0);
}

double fidelity(const DensityOp& rho, const DensityOp& sigma) {
  return fidelity(rho.matrix(), sigma.matrix());
}

double trace_distance(const DensityOp& rho, const DensityOp& sigma) {
  return trace_distance(rho.matrix(), sigma.matrix());
}

double relative_entropy(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows()) throw std::invalid_argument("relative_entropy: dimension mismatch");
  Matrix outside = Matrix::Identity(sigma.rows(), sigma.cols()) - support_projector(sigma);
  if ((outside * rho * outside).trace().real() > 1e-9) {
    return std::numeric_limits<double>::infinity();
  }
  double v = -entropy_bits(rho) - (rho * mat_fn_on_support(sigma, MatFn::log)).trace().real();
  return v;
}

double continuity_bound(int d, double eps) {
  if (d < 2) throw std::invalid_argument("continuity_bound: d must be at least 2");
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("continuity_bound: eps outside [0, 1]");
  const double s = std::sqrt(eps);
  return 2.0 * s * std::log2(static_cast<double>(d)) +
         (1.0 + 2.0 * s) * binary_entropy(2.0 * s / (1.0 + 2.0 * s));
}

PureState make_ghz(int n) {
  if (n < 2) throw std::invalid_argument("make_ghz: n must be at least 2");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(std::size_t{1} << n));
  v(0) = v(v.size() - 1) = 1.0 / std::sqrt(2.0);
  return PureState::normalized(std::move(v));
}

PureState make_w(int n) {
  if (n < 3) throw std::invalid_argument("make_w: n must be at least 3");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(std::size_t{1} << n));
  for (int k = 0; k < n; ++k) v(Eigen::Index{1} << (n - 1 - k)) = 1.0;
  return PureState::normalized(std::move(v));
}

double table1_closed_form(int n) {
  if (n < 4) throw std::invalid_argument("table1_closed_form: n must be at least 4");
  const double x = static_cast<double>(n);
  return 2.0 * binary_entropy(2.0 / x) - binary_entropy(1.0 / x) - binary_entropy(3.0 / x);
}

// ---------------------------------------------------------------------------

PureQcmi::Cut PureQcmi::make_cut(const Dims& dims, const Qubits& keep) {
  const auto rest = tensor::complement(static_cast<int>(dims.size()), keep);
  return {tensor::offsets(dims, keep), tensor::offsets(dims, rest)};
}

PureQcmi::PureQcmi(int n_qubits, const RegionPartition& part) {
  part.validate(n_qubits);
  const Dims dims(static_cast<std::size_t>(n_qubits), 2);
  ab_ = make_cut(dims, concat({&part.a, &part.b}));
  bc_ = make_cut(dims, concat({&part.b, &part.c}));
  b_ = make_cut(dims, part.b);
  abc_ = make_cut(dims, part.abc());
  b_empty_ = part.b.empty();
}

PureQcmi::PureQcmi(const Dims& dims, const Qubits& a, const Qubits& b, const Qubits& c) {
  Qubits all = concat({&a, &b, &c});
  std::vector<bool> seen(dims.size(), false);
  for (int s : all) {
    if (s < 0 || s >= static_cast<int>(dims.size()) || seen[static_cast<std::size_t>(s)]) {
      throw std::invalid_argument("PureQcmi: subsystems must be distinct and in range");
    }
    seen[static_cast<std::size_t>(s)] = true;
  }
  ab_ = make_cut(dims, concat({&a, &b}));
  bc_ = make_cut(dims, concat({&b, &c}));
  b_ = make_cut(dims, b);
  abc_ = make_cut(dims, all);
  b_empty_ = b.empty();
}

double PureQcmi::entropy(const Vector& psi, const Cut& cut) {
  const auto nk = static_cast<Eigen::Index>(cut.keep.size());
  const auto nr = static_cast<Eigen::Index>(cut.rest.size());
  if (nk == 1 || nr == 1) return 0.0;
  Matrix m(nk, nr);
  for (Eigen::Index t = 0; t < nr; ++t) {
    for (Eigen::Index r = 0; r < nk; ++r) {
      m(r, t) = psi(static_cast<Eigen::Index>(cut.keep[static_cast<std::size_t>(r)] +
                                              cut.rest[static_cast<std::size_t>(t)]));
    }
  }
  return gram_entropy(m);
}

double PureQcmi::operator()(const Vector& psi) const {
  double s_b = b_empty_ ? 0.0 : entropy(psi, b_);
  return entropy(psi, ab_) + entropy(psi, bc_) - s_b - entropy(psi, abc_);
}

}  // namespace hsq
