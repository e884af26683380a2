#include "hsq/squashed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <future>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>

#include "hsq/measures.hpp"
#include "hsq/optimize.hpp"
#include "hsq/random.hpp"

namespace hsq {

namespace {

constexpr double kPurityTol = 1e-10;
constexpr double kTinyWeight = 1e-15;

using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Qubits iota_qubits(int n, int start = 0) {
  Qubits q(static_cast<std::size_t>(n));
  std::iota(q.begin(), q.end(), start);
  return q;
}

Qubits concat(const Qubits& a, const Qubits& b) {
  Qubits q = a;
  q.insert(q.end(), b.begin(), b.end());
  return q;
}

int qubits_of(Eigen::Index dim) {
  const auto d = static_cast<std::size_t>(dim);
  if (d < 2 || !std::has_single_bit(d)) throw std::invalid_argument("dimension is not a power of two");
  return std::bit_width(d) - 1;
}

Dims joint_dims_of(int n, int e, int f) {
  Dims d(static_cast<std::size_t>(n), 2);
  d.push_back(e);
  d.push_back(f);
  return d;
}

Vector joint_of(const Matrix& frame, const Matrix& isometry) {
  RowMatrix m = frame * isometry.transpose();
  return Eigen::Map<const Vector>(m.data(), m.size());
}

PureQcmi ansatz_cmi(int n, int e, int f, const RegionPartition& part) {
  return PureQcmi(joint_dims_of(n, e, f), part.a, concat(part.b, {n}), part.c);
}

/// Eigen frame K with K K^† = rho restricted to eigenvalues above kRankTol.
struct Frame {
  Matrix k;
  Matrix pinv;  // K^+
  int rank = 0;
};

Frame eigen_frame(const Matrix& rho) {
  const SpectralDecomp sd = eigh(rho);
  if (sd.rank == 0) throw std::invalid_argument("state has no support");
  Frame fr;
  fr.rank = sd.rank;
  const RealVector sq = sd.eigenvalues.head(sd.rank).cwiseSqrt();
  fr.k = sd.eigenvectors.leftCols(sd.rank) * sq.asDiagonal();
  fr.pinv = sq.cwiseInverse().asDiagonal() * sd.eigenvectors.leftCols(sd.rank).adjoint();
  return fr;
}

Matrix orthonormalize(const Matrix& v) {
  Eigen::JacobiSVD<Matrix> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

double ensemble_value(const EnsembleDecomp& d, const PureQcmi& pq) {
  double acc = 0;
  for (std::size_t i = 0; i < d.weights.size(); ++i) {
    if (d.weights[i] > kTinyWeight) acc += d.weights[i] * pq(d.states[i]);
  }
  return 0.5 * acc;
}

/// Decomposition with sqrt(p_i) psi_i = column i of K W^T.
EnsembleDecomp decomp_from_mixing(const Matrix& frame, const Matrix& w) {
  const Matrix u = frame * w.transpose();
  EnsembleDecomp d;
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    const double p = u.col(i).squaredNorm();
    if (p <= kTinyWeight) continue;
    d.weights.push_back(p);
    d.states.push_back(u.col(i) / std::sqrt(p));
  }
  const double total = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
  for (double& p : d.weights) p /= total;
  return d;
}

/// Mixing matrix W (m x r) of a decomposition relative to a frame: W^T = K^+ [sqrt(p_i) psi_i].
Matrix mixing_of(const Frame& fr, const EnsembleDecomp& d) {
  Matrix cols(fr.k.rows(), static_cast<Eigen::Index>(d.states.size()));
  for (std::size_t i = 0; i < d.states.size(); ++i) {
    cols.col(static_cast<Eigen::Index>(i)) = std::sqrt(std::max(d.weights[i], 0.0)) * d.states[i];
  }
  return (fr.pinv * cols).transpose();
}

/// Flag isometry V|k> = sum_i W_ik |i>_E |i>_F, padded into e x f.
Matrix flag_isometry(const Matrix& w, int e, int f) {
  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(e) * f, w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i) v.row(i * f + i) = w.row(i);
  return v;
}

Matrix embed_isometry(const Matrix& v, int e0, int f0, int e, int f) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(e) * f, v.cols());
  for (int a = 0; a < e0; ++a) {
    for (int j = 0; j < f0; ++j) out.row(a * f + j) = v.row(a * f0 + j);
  }
  return out;
}

/// Ansatz on the frame `fr` that realizes an explicit extension.
ExtensionAnsatz ansatz_from_extension(const Frame& fr, const ExtendedState& ext) {
  const SpectralDecomp sd = eigh(ext.state);
  const int rs = sd.rank;
  const Eigen::Index sys = fr.k.rows();
  const int e = ext.e_dim;
  Matrix kp(sys, static_cast<Eigen::Index>(e) * rs);
  for (int j = 0; j < rs; ++j) {
    const double s = std::sqrt(sd.eigenvalues(j));
    for (Eigen::Index x = 0; x < sys; ++x) {
      for (int a = 0; a < e; ++a) kp(x, a * rs + j) = s * sd.eigenvectors(x * e + a, j);
    }
  }
  ExtensionAnsatz an;
  an.frame = fr.k;
  an.isometry = orthonormalize((fr.pinv * kp).transpose());
  an.e_dim = e;
  an.f_dim = rs;
  an.origin = AnsatzOrigin::user;
  return an;
}

struct Restart {
  Matrix iso;
  double value = 0;
  int evals = 0;
  bool converged = false;
};

Restart polish(const Matrix& seed, const std::function<double(const Matrix&)>& f,
               const SquashOptions& opts) {
  StiefelChart chart(orthonormalize(seed));
  const RealVector zero = RealVector::Zero(chart.n_params());
  Restart out;
  double best = f(chart.at(zero));
  out.evals = 1;
  SimplexOptions so{opts.initial_step, opts.tol, opts.window, opts.max_evals};
  while (out.evals < opts.max_evals) {
    so.max_evals = opts.max_evals - out.evals;
    const SimplexResult res = nelder_mead([&](const RealVector& t) { return f(chart.at(t)); }, zero, so);
    out.evals += res.evals;
    const bool improved = res.value < best - opts.tol;
    if (res.value < best) {
      chart.recenter(res.x);
      best = res.value;
    }
    if (!improved) {
      out.converged = res.converged;
      break;
    }
  }
  out.iso = chart.at(zero);
  out.value = f(out.iso);
  return out;
}

/// Polishes the seeds (best first, at most opts.restarts) and fills with random isometries.
std::vector<Restart> polish_all(std::vector<Matrix> seeds, Eigen::Index rows, Eigen::Index cols,
                                const std::function<double(const Matrix&)>& f,
                                const SquashOptions& opts) {
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < seeds.size(); ++i) ranked.emplace_back(f(seeds[i]), i);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<Matrix> starts;
  for (const auto& [v, i] : ranked) {
    if (static_cast<int>(starts.size()) >= opts.restarts) break;
    starts.push_back(seeds[i]);
  }
  for (int i = static_cast<int>(starts.size()); i < opts.restarts; ++i) {
    Rng rng(split_seed(opts.seed, static_cast<std::uint64_t>(i)));
    starts.push_back(random_isometry(rows, cols, rng));
  }

  std::vector<Restart> out(starts.size());
  if (opts.threads <= 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) out[i] = polish(starts[i], f, opts);
    return out;
  }
  for (std::size_t lo = 0; lo < starts.size(); lo += static_cast<std::size_t>(opts.threads)) {
    std::vector<std::future<Restart>> jobs;
    const std::size_t hi = std::min(starts.size(), lo + static_cast<std::size_t>(opts.threads));
    for (std::size_t i = lo; i < hi; ++i) {
      jobs.push_back(std::async(std::launch::async, [&, i] { return polish(starts[i], f, opts); }));
    }
    for (std::size_t i = lo; i < hi; ++i) out[i] = jobs[i - lo].get();
  }
  return out;
}

const Restart& best_of(const std::vector<Restart>& rs) {
  return *std::min_element(rs.begin(), rs.end(),
                           [](const Restart& x, const Restart& y) { return x.value < y.value; });
}

ExtensionAnsatz make_ansatz(const Matrix& frame, Matrix iso, int e, int f, AnsatzOrigin origin) {
  ExtensionAnsatz a;
  a.frame = frame;
  a.isometry = std::move(iso);
  a.e_dim = e;
  a.f_dim = f;
  a.origin = origin;
  return a;
}

BoundReport report_of(double value, BoundKind kind, Certificate cert, const RegionPartition& part,
                      const Qubits& qubit_map) {
  BoundReport r;
  r.value = value;
  r.kind = kind;
  r.certificate = std::move(cert);
  r.part = part;
  r.qubit_map = qubit_map;
  return r;
}

BoundReport pure_report(const Vector& psi, const RegionPartition& part, const Qubits& qubit_map) {
  const int n = qubits_of(psi.size());
  Matrix frame = psi;
  ExtensionAnsatz a = make_ansatz(frame, Matrix::Identity(1, 1), 1, 1, AnsatzOrigin::purification);
  const double v = 0.5 * PureQcmi(n, part)(psi);
  BoundReport r = report_of(v, BoundKind::exact_pure, std::move(a), part, qubit_map);
  r.candidates.push_back({"exact_pure", v});
  return r;
}

Vector top_eigenvector(const Matrix& rho) { return eigh(rho).eigenvectors.col(0); }

/// Chooses extension dimensions with e f >= rank and n + log2(e f) <= max_joint_qubits.
std::optional<std::pair<int, int>> extension_dims(int n, int rank, const SquashOptions& opts) {
  int e = opts.e_dim > 0 ? opts.e_dim : rank;
  int f = opts.f_dim > 0 ? opts.f_dim : rank;
  const double budget = std::ldexp(1.0, opts.max_joint_qubits - n);
  while (static_cast<double>(e) * f > budget) {
    int& big = e >= f ? e : f;
    if (big <= 1) return std::nullopt;
    --big;
    if (e * f < rank) return std::nullopt;
  }
  if (e * f < rank) return std::nullopt;
  return std::make_pair(e, f);
}

struct CoreResult {
  std::vector<BoundReport> candidates;
  std::optional<BoundReport> variational;
  std::vector<std::string> notes;
  int restarts = 0;
};

BoundReport pick(std::vector<BoundReport> cands, std::vector<std::string> notes, int restarts) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (cands[i].value < cands[best].value) best = i;
  }
  BoundReport out = cands[best];
  out.candidates.clear();
  for (const BoundReport& c : cands) {
    for (const Candidate& cc : c.candidates) out.candidates.push_back(cc);
  }
  out.notes = std::move(notes);
  out.restarts_used = restarts;
  return out;
}

BoundReport coqcmi_on(const DensityOp& rho, const RegionPartition& part, const Qubits& qubit_map,
                      const std::vector<EnsembleDecomp>& seeds, const SquashOptions& opts) {
  const int n = rho.n_qubits();
  if (rho.purity() >= 1 - kPurityTol) {
    EnsembleDecomp d{{1.0}, {top_eigenvector(rho.matrix())}};
    const double v = ensemble_value(d, PureQcmi(n, part));
    BoundReport r = report_of(v, BoundKind::convex_roof, std::move(d), part, qubit_map);
    r.candidates.push_back({"convex_roof", v});
    return r;
  }
  const Frame fr = eigen_frame(rho.matrix());
  if (fr.rank > opts.rank_cap) {
    throw std::invalid_argument("co(QCMI): rank " + std::to_string(fr.rank) + " exceeds the cap of " +
                                std::to_string(opts.rank_cap));
  }
  const int m = std::max(opts.m_max > 0 ? opts.m_max : 2 * fr.rank, fr.rank);
  const PureQcmi pq(n, part);
  auto objective = [&](const Matrix& w) {
    const Matrix u = fr.k * w.transpose();
    double acc = 0;
    for (Eigen::Index i = 0; i < u.cols(); ++i) {
      const double p = u.col(i).squaredNorm();
      if (p > kTinyWeight) acc += p * pq(u.col(i) / std::sqrt(p));
    }
    return 0.5 * acc;
  };

  // Explicit decompositions are candidates in their own right.
  std::vector<std::pair<double, EnsembleDecomp>> explicit_cands;
  EnsembleDecomp eig = EnsembleDecomp::eigen(rho);
  explicit_cands.emplace_back(ensemble_value(eig, pq), eig);
  std::vector<Matrix> starts;
  starts.push_back(Matrix::Identity(m, fr.rank));
  for (const EnsembleDecomp& d : seeds) {
    d.validate(rho);
    explicit_cands.emplace_back(ensemble_value(d, pq), d);
    if (static_cast<int>(d.states.size()) <= m) {
      Matrix w = Matrix::Zero(m, fr.rank);
      w.topRows(static_cast<Eigen::Index>(d.states.size())) = mixing_of(fr, d);
      starts.push_back(w);
    }
  }

  const std::vector<Restart> rs = polish_all(starts, m, fr.rank, objective, opts);
  const Restart& best = best_of(rs);

  BoundReport out;
  EnsembleDecomp polished = decomp_from_mixing(fr.k, best.iso);
  const double polished_value = ensemble_value(polished, pq);
  out = report_of(polished_value, BoundKind::convex_roof, polished, part, qubit_map);
  out.converged = best.converged;
  for (const auto& [v, d] : explicit_cands) {
    if (v < out.value) {
      out.value = v;
      out.certificate = d;
      out.converged = true;
    }
  }
  out.restarts_used = static_cast<int>(rs.size());
  out.candidates.push_back({"convex_roof", out.value});
  return out;
}

/// Candidate-set minimization of 1/2 I(A;C|BE) over extensions of rho (D traced).
CoreResult squash_core(const DensityOp& rho, const RegionPartition& part, const Qubits& qubit_map,
                       const std::vector<ExtendedState>& hints, const std::vector<EnsembleDecomp>& seeds,
                       const SquashOptions& opts, bool variational) {
  CoreResult res;
  const int n = rho.n_qubits();
  const Frame fr = eigen_frame(rho.matrix());
  const int r = fr.rank;
  const Matrix id_r = Matrix::Identity(r, r);

  auto add_ansatz = [&](ExtensionAnsatz a, BoundKind kind, const std::string& label) {
    const double v = evaluate_ansatz(a, part);
    BoundReport b = report_of(v, kind, std::move(a), part, qubit_map);
    b.candidates.push_back({label, v});
    res.candidates.push_back(std::move(b));
  };

  add_ansatz(make_ansatz(fr.k, id_r, 1, r, AnsatzOrigin::trivial), BoundKind::half_qcmi_trivial, "trivial");
  add_ansatz(make_ansatz(fr.k, id_r, r, 1, AnsatzOrigin::purification), BoundKind::half_qcmi_given_D,
             "purification");

  const PureQcmi pq(n, part);
  EnsembleDecomp eig = EnsembleDecomp::eigen(rho);
  {
    const double v = ensemble_value(eig, pq);
    BoundReport b = report_of(v, BoundKind::classical_flag, eig, part, qubit_map);
    b.candidates.push_back({"classical_flag", v});
    res.candidates.push_back(std::move(b));
  }
  for (const EnsembleDecomp& d : seeds) {
    d.validate(rho);
    const double v = ensemble_value(d, pq);
    BoundReport b = report_of(v, BoundKind::classical_flag, d, part, qubit_map);
    b.candidates.push_back({"seed decomposition", v});
    res.candidates.push_back(std::move(b));
  }

  std::optional<EnsembleDecomp> roof;
  if (opts.use_coqcmi && r > 1) {
    if (r <= opts.rank_cap) {
      BoundReport c = coqcmi_on(rho, part, qubit_map, seeds, opts);
      res.restarts += c.restarts_used;
      if (auto* d = std::get_if<EnsembleDecomp>(&c.certificate)) roof = *d;
      res.candidates.push_back(std::move(c));
    } else {
      res.notes.push_back("co(QCMI) skipped: rank above cap");
    }
  }

  std::vector<ExtensionAnsatz> hint_ansatz;
  for (const ExtendedState& h : hints) {
    h.validate_against(rho);
    hint_ansatz.push_back(ansatz_from_extension(fr, h));
    add_ansatz(hint_ansatz.back(), BoundKind::variational, "hint");
  }

  if (!variational || !opts.variational) return res;
  if (n > opts.max_variational_qubits) {
    res.notes.push_back("variational search skipped: above " +
                        std::to_string(opts.max_variational_qubits) + " qubits");
    return res;
  }
  const auto dims = extension_dims(n, r, opts);
  if (!dims) {
    res.notes.push_back("variational search skipped: no extension dimensions fit the joint cap");
    return res;
  }
  const auto [e, f] = *dims;
  const PureQcmi jq = ansatz_cmi(n, e, f, part);
  auto objective = [&](const Matrix& v) { return 0.5 * jq(joint_of(fr.k, v)); };

  std::vector<Matrix> starts;
  if (f >= r) starts.push_back(embed_isometry(id_r, 1, r, e, f));
  if (e >= r) starts.push_back(embed_isometry(id_r, r, 1, e, f));
  if (e >= r && f >= r) starts.push_back(flag_isometry(id_r, e, f));
  if (roof) {
    const Matrix w = mixing_of(fr, *roof);
    if (w.rows() <= std::min(e, f)) starts.push_back(flag_isometry(w, e, f));
  }
  for (const ExtensionAnsatz& h : hint_ansatz) {
    if (h.e_dim <= e && h.f_dim <= f) starts.push_back(embed_isometry(h.isometry, h.e_dim, h.f_dim, e, f));
  }
  const std::vector<Restart> rs = polish_all(starts, static_cast<Eigen::Index>(e) * f, r, objective, opts);
  const Restart& best = best_of(rs);
  res.restarts += static_cast<int>(rs.size());

  ExtensionAnsatz a = make_ansatz(fr.k, best.iso, e, f, AnsatzOrigin::random);
  const double v = evaluate_ansatz(a, part);
  BoundReport b = report_of(v, BoundKind::variational, std::move(a), part, qubit_map);
  b.converged = best.converged;
  b.restarts_used = static_cast<int>(rs.size());
  b.candidates.push_back({"variational", v});
  res.variational = b;
  res.candidates.push_back(std::move(b));
  return res;
}

/// Hints of the full input reduced to `keep`; `fold` qubits are merged into E rather than traced.
std::vector<ExtendedState> reduce_hints(const std::vector<ExtendedState>& hints, const DensityOp& rho,
                                        const Qubits& keep, const Qubits& fold) {
  std::vector<ExtendedState> out;
  const int nk = static_cast<int>(keep.size());
  for (const ExtendedState& h : hints) {
    h.validate_against(rho);
    Qubits traced_order = keep;
    traced_order.push_back(h.e_index());
    out.push_back({tensor::reduce(h.state, h.dims(), traced_order), nk, h.e_dim});
    if (!fold.empty()) {
      Qubits order = concat(keep, fold);
      order.push_back(h.e_index());
      out.push_back({tensor::reduce(h.state, h.dims(), order), nk, h.e_dim << fold.size()});
    }
  }
  return out;
}

/// Marginal register and reindexed partition for a subset of regions.
struct Marginal {
  DensityOp rho;
  RegionPartition part;
  Qubits qubit_map;
};

Marginal marginal_of(const DensityOp& rho, const Qubits& a, const Qubits& b, const Qubits& c) {
  const Qubits keep = concat(concat(a, b), c);
  const int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size()),
            nc = static_cast<int>(c.size());
  Marginal m{partial_trace(rho, keep),
             RegionPartition::make(na + nb + nc, iota_qubits(na), iota_qubits(nb, na),
                                   iota_qubits(nc, na + nb), Qubits{}),
             keep};
  return m;
}

/// Product-with-D check: rho == rho_ABC ⊗ rho_D.
bool is_product_with_d(const DensityOp& rho, const RegionPartition& part) {
  if (part.d.empty()) return false;
  const Qubits abc = part.abc();
  const Matrix m_abc = tensor::reduce(rho.matrix(), rho.reg().dims(), abc);
  const Matrix m_d = tensor::reduce(rho.matrix(), rho.reg().dims(), part.d);
  Matrix prod = Eigen::kroneckerProduct(m_abc, m_d);
  const Qubits order = concat(abc, part.d);
  std::vector<int> inverse(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) inverse[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
  prod = tensor::permute(prod, rho.reg().dims(), inverse);
  return trace_distance(prod, rho.matrix()) <= 1e-10;
}

std::vector<int> inverse_order(const Qubits& order) {
  std::vector<int> inv(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) inv[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
  return inv;
}

/// Lifts an ABC-marginal certificate to the full register by appending the eigen frame of rho_D.
Certificate lift_with_d(const Certificate& cert, const DensityOp& rho, const RegionPartition& part) {
  const Qubits order = concat(part.abc(), part.d);
  const std::vector<int> inv = inverse_order(order);
  const Dims dims = rho.reg().dims();
  const DensityOp rho_d = partial_trace(rho, part.d);
  if (const auto* a = std::get_if<ExtensionAnsatz>(&cert)) {
    const Frame fd = eigen_frame(rho_d.matrix());
    Matrix frame = Eigen::kroneckerProduct(a->frame, fd.k);
    for (Eigen::Index j = 0; j < frame.cols(); ++j) {
      frame.col(j) = tensor::permute(Vector(frame.col(j)), dims, inv);
    }
    Matrix iso = Eigen::kroneckerProduct(a->isometry, Matrix::Identity(fd.rank, fd.rank));
    ExtensionAnsatz lifted = make_ansatz(frame, iso, a->e_dim, a->f_dim * fd.rank, a->origin);
    return lifted;
  }
  const auto& d = std::get<EnsembleDecomp>(cert);
  const EnsembleDecomp ed = EnsembleDecomp::eigen(rho_d);
  EnsembleDecomp out;
  for (std::size_t i = 0; i < d.weights.size(); ++i) {
    for (std::size_t j = 0; j < ed.weights.size(); ++j) {
      Vector v = Eigen::kroneckerProduct(d.states[i], ed.states[j]);
      out.weights.push_back(d.weights[i] * ed.weights[j]);
      out.states.push_back(tensor::permute(v, dims, inv));
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

const char* to_string(AnsatzOrigin o) {
  switch (o) {
    case AnsatzOrigin::trivial: return "trivial";
    case AnsatzOrigin::purification: return "purification";
    case AnsatzOrigin::classical_flag: return "classical_flag";
    case AnsatzOrigin::random: return "random";
    case AnsatzOrigin::user: return "user";
  }
  return "?";
}

const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::exact_pure: return "exact_pure";
    case BoundKind::half_qcmi_trivial: return "half_qcmi_trivial";
    case BoundKind::half_qcmi_given_D: return "half_qcmi_given_D";
    case BoundKind::classical_flag: return "classical_flag";
    case BoundKind::convex_roof: return "convex_roof";
    case BoundKind::variational: return "variational";
  }
  return "?";
}

int ExtensionAnsatz::n_qubits() const { return qubits_of(frame.rows()); }

Dims ExtensionAnsatz::joint_dims() const { return joint_dims_of(n_qubits(), e_dim, f_dim); }

Vector ExtensionAnsatz::joint_vector() const { return joint_of(frame, isometry); }

ExtendedState ExtensionAnsatz::materialize() const {
  const int n = n_qubits();
  const Qubits keep = concat(iota_qubits(n), {n});
  return {tensor::reduce_pure(joint_vector(), joint_dims(), keep), n, e_dim};
}

void ExtensionAnsatz::validate(const DensityOp& rho, double tol) const {
  if (frame.rows() != static_cast<Eigen::Index>(rho.dim())) throw std::invalid_argument("ansatz frame has the wrong dimension");
  if (isometry.rows() != static_cast<Eigen::Index>(e_dim) * f_dim || isometry.cols() != frame.cols()) {
    throw std::invalid_argument("ansatz isometry has the wrong shape");
  }
  const auto r = isometry.cols();
  if ((isometry.adjoint() * isometry - Matrix::Identity(r, r)).cwiseAbs().maxCoeff() > 1e-8) {
    throw std::invalid_argument("ansatz map is not an isometry");
  }
  if (trace_distance(Matrix(frame * frame.adjoint()), rho.matrix()) > tol) {
    throw std::invalid_argument("ansatz does not reproduce the state");
  }
}

void EnsembleDecomp::validate(const DensityOp& rho, double tol) const {
  if (weights.empty() || weights.size() != states.size()) throw std::invalid_argument("malformed decomposition");
  double total = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0) throw std::invalid_argument("negative ensemble weight");
    if (states[i].size() != static_cast<Eigen::Index>(rho.dim())) throw std::invalid_argument("ensemble state has the wrong dimension");
    if (std::abs(states[i].squaredNorm() - 1) > 1e-8) throw std::invalid_argument("ensemble state is not normalized");
    total += weights[i];
  }
  if (std::abs(total - 1) > 1e-8) throw std::invalid_argument("ensemble weights do not sum to one");
  if (trace_distance(reconstruct(), rho.matrix()) > tol) {
    throw std::invalid_argument("decomposition does not reproduce the state");
  }
}

Matrix EnsembleDecomp::reconstruct() const {
  const Eigen::Index d = states.front().size();
  Matrix m = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] * states[i] * states[i].adjoint();
  return m;
}

EnsembleDecomp EnsembleDecomp::eigen(const DensityOp& rho) {
  const SpectralDecomp sd = eigh(rho.matrix());
  EnsembleDecomp d;
  double total = 0;
  for (int k = 0; k < sd.rank; ++k) {
    d.weights.push_back(sd.eigenvalues(k));
    d.states.push_back(sd.eigenvectors.col(k));
    total += sd.eigenvalues(k);
  }
  for (double& p : d.weights) p /= total;
  return d;
}

EnsembleDecomp EnsembleDecomp::merge(const std::vector<std::pair<double, EnsembleDecomp>>& parts) {
  EnsembleDecomp out;
  for (const auto& [p, d] : parts) {
    for (std::size_t i = 0; i < d.weights.size(); ++i) {
      out.weights.push_back(p * d.weights[i]);
      out.states.push_back(d.states[i]);
    }
  }
  return out;
}

ExtendedState EnsembleDecomp::flag_extension() const {
  const Eigen::Index d = states.front().size();
  const auto m = static_cast<Eigen::Index>(weights.size());
  Matrix out = Matrix::Zero(d * m, d * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Matrix block = weights[static_cast<std::size_t>(i)] * states[static_cast<std::size_t>(i)] *
                         states[static_cast<std::size_t>(i)].adjoint();
    for (Eigen::Index s = 0; s < d; ++s) {
      for (Eigen::Index t = 0; t < d; ++t) out(s * m + i, t * m + i) = block(s, t);
    }
  }
  return {out, qubits_of(d), static_cast<int>(m)};
}

double evaluate_ansatz(const ExtensionAnsatz& ansatz, const RegionPartition& part) {
  return 0.5 * ansatz_cmi(ansatz.n_qubits(), ansatz.e_dim, ansatz.f_dim, part)(ansatz.joint_vector());
}

double evaluate_extension(const ExtendedState& ext, const RegionPartition& part) {
  const Dims dims = ext.dims();
  const int e = ext.e_index();
  auto s = [&](Qubits keep) {
    if (keep.empty()) return 0.0;
    return entropy_bits(tensor::reduce(ext.state, dims, keep));
  };
  const Qubits be = concat(part.b, {e});
  return 0.5 * (s(concat(part.a, be)) + s(concat(be, part.c)) - s(be) - s(concat(concat(part.a, be), part.c)));
}

double reevaluate(const BoundReport& report) {
  if (const auto* a = std::get_if<ExtensionAnsatz>(&report.certificate)) {
    return evaluate_ansatz(*a, report.part);
  }
  const auto& d = std::get<EnsembleDecomp>(report.certificate);
  return ensemble_value(d, PureQcmi(qubits_of(d.states.front().size()), report.part));
}

ExtendedState materialize(const BoundReport& report) {
  if (const auto* a = std::get_if<ExtensionAnsatz>(&report.certificate)) return a->materialize();
  return std::get<EnsembleDecomp>(report.certificate).flag_extension();
}

BoundReport tsq_pure(const PureState& psi, const RegionPartition& part) {
  part.validate(psi.n_qubits());
  return pure_report(psi.amplitudes(), part, iota_qubits(psi.n_qubits()));
}

BoundReport classical_flag_bound(const EnsembleDecomp& decomp, const RegionPartition& part) {
  if (decomp.weights.empty() || decomp.weights.size() != decomp.states.size()) {
    throw std::invalid_argument("malformed decomposition");
  }
  const int n = qubits_of(decomp.states.front().size());
  part.validate(n);
  double total = 0;
  for (std::size_t i = 0; i < decomp.weights.size(); ++i) {
    if (decomp.weights[i] < 0) throw std::invalid_argument("negative ensemble weight");
    if (std::abs(decomp.states[i].squaredNorm() - 1) > 1e-8) throw std::invalid_argument("ensemble state is not normalized");
    total += decomp.weights[i];
  }
  if (std::abs(total - 1) > 1e-8) throw std::invalid_argument("ensemble weights do not sum to one");
  const double v = ensemble_value(decomp, PureQcmi(n, part));
  BoundReport r = report_of(v, BoundKind::classical_flag, decomp, part, iota_qubits(n));
  r.candidates.push_back({"classical_flag", v});
  return r;
}

BoundReport coqcmi(const DensityOp& rho, const RegionPartition& part, const SquashOptions& opts) {
  part.validate(rho.n_qubits());
  return coqcmi_on(rho, part, iota_qubits(rho.n_qubits()), opts.seed_decomps, opts);
}

BoundReport tsq_upper(const DensityOp& rho, const RegionPartition& part, const SquashOptions& opts) {
  part.validate(rho.n_qubits());
  const Qubits all = iota_qubits(rho.n_qubits());
  if (rho.purity() >= 1 - kPurityTol) return pure_report(top_eigenvector(rho.matrix()), part, all);
  if (is_product_with_d(rho, part)) {
    BoundReport n = nsq_upper(rho, part, opts);
    n.certificate = lift_with_d(n.certificate, rho, part);
    n.part = part;
    n.qubit_map = all;
    n.notes.push_back("state is a product with D; computed on the ABC marginal and lifted");
    return n;
  }
  CoreResult c = squash_core(rho, part, all, opts.hints, opts.seed_decomps, opts, true);
  return pick(std::move(c.candidates), std::move(c.notes), c.restarts);
}

BoundReport tsq_variational(const DensityOp& rho, const RegionPartition& part, const SquashOptions& opts) {
  part.validate(rho.n_qubits());
  if (rho.n_qubits() > opts.max_variational_qubits) {
    throw std::invalid_argument("variational search is limited to " +
                                std::to_string(opts.max_variational_qubits) + " qubits");
  }
  SquashOptions o = opts;
  o.variational = true;
  o.use_coqcmi = false;
  CoreResult c = squash_core(rho, part, iota_qubits(rho.n_qubits()), o.hints, {}, o, true);
  if (!c.variational) throw std::invalid_argument(c.notes.empty() ? "variational search not run" : c.notes.front());
  return *c.variational;
}

BoundReport nsq_upper(const DensityOp& rho, const RegionPartition& part, const SquashOptions& opts) {
  part.validate(rho.n_qubits());
  Marginal m = marginal_of(rho, part.a, part.b, part.c);
  const std::vector<ExtendedState> hints = reduce_hints(opts.hints, rho, m.qubit_map, part.d);
  if (m.rho.purity() >= 1 - kPurityTol) return pure_report(top_eigenvector(m.rho.matrix()), m.part, m.qubit_map);
  CoreResult c = squash_core(m.rho, m.part, m.qubit_map, hints, {}, opts, true);
  return pick(std::move(c.candidates), std::move(c.notes), c.restarts);
}

BoundReport esq_upper(const DensityOp& rho, const RegionPartition& part, const SquashOptions& opts) {
  part.validate(rho.n_qubits());
  Marginal m = marginal_of(rho, part.a, {}, part.c);
  const std::vector<ExtendedState> hints = reduce_hints(opts.hints, rho, m.qubit_map, concat(part.b, part.d));
  if (m.rho.purity() >= 1 - kPurityTol) return pure_report(top_eigenvector(m.rho.matrix()), m.part, m.qubit_map);
  CoreResult c = squash_core(m.rho, m.part, m.qubit_map, hints, {}, opts, true);
  return pick(std::move(c.candidates), std::move(c.notes), c.restarts);
}

HierarchyReport hierarchy_check(const DensityOp& rho, const RegionPartition& part, const SquashOptions& opts) {
  HierarchyReport h;
  const BoundReport t = tsq_upper(rho, part, opts);
  SquashOptions injected = opts;
  injected.hints.push_back(materialize(t));
  h.tsq = t.value;
  h.nsq = nsq_upper(rho, part, injected).value;
  h.esq = esq_upper(rho, part, injected).value;

  // 1/2 I(A;C|D): the purification extension.
  const Qubits ad = concat(part.a, part.d), cd = concat(part.c, part.d), acd = concat(ad, part.c);
  auto s = [&](const Qubits& q) { return q.empty() ? 0.0 : entropy(partial_trace(rho, q)).value; };
  h.half_i_acd = 0.5 * (s(ad) + s(cd) - s(part.d) - s(acd));
  h.tsq_below_half_i_acd = h.tsq <= h.half_i_acd + 1e-9;
  h.nsq_below_tsq = h.nsq <= h.tsq + 1e-2;
  return h;
}

MonogamyDiagnostic monogamy_diagnostic(const DensityOp& rho, const RegionPartition& part, const Qubits& a1,
                                       const Qubits& a2, const SquashOptions& opts) {
  Qubits joined = concat(a1, a2);
  std::sort(joined.begin(), joined.end());
  Qubits a = part.a;
  std::sort(a.begin(), a.end());
  if (joined != a) throw std::invalid_argument("A1 and A2 must split region A");
  MonogamyDiagnostic m;
  m.joint = tsq_upper(rho, part, opts).value;
  m.first = tsq_upper(rho, RegionPartition::make(rho.n_qubits(), a1, part.b, part.c, concat(part.d, a2)), opts).value;
  m.second = tsq_upper(rho, RegionPartition::make(rho.n_qubits(), a2, part.b, part.c, concat(part.d, a1)), opts).value;
  m.difference = m.joint - m.first - m.second;
  m.note = "reduced terms place the other half of A in D; values are upper bounds, so the sign is not "
           "guaranteed";
  return m;
}

}  // namespace hsq
