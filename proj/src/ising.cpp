#include "hsq/ising.hpp"

#include <bit>
#include <cmath>
#include <future>
#include <sstream>
#include <stdexcept>

#include "hsq/random.hpp"

namespace hsq {

namespace {

constexpr double kGridTol = 1e-9;

void check_size(int n) {
  if (n < 1 || n > kDefaultMaxQubits) {
    throw std::invalid_argument("Ising chain size must be between 1 and " + std::to_string(kDefaultMaxQubits));
  }
}

inline std::size_t mask(int n, int q) { return std::size_t{1} << (n - 1 - q); }

inline double z_of(std::size_t j, int n, int q) { return (j & mask(n, q)) ? -1.0 : 1.0; }

long grid_index(double t, double t0, double dt) {
  const double k = (t - t0) / dt;
  const long r = std::lround(k);
  if (std::abs(static_cast<double>(r) * dt - (t - t0)) > kGridTol * std::max(1.0, std::abs(t))) {
    throw std::invalid_argument("time " + std::to_string(t) + " is not on the step grid");
  }
  return r;
}

/// Non-Hermitian drift -i H x - (gamma n / 2) x for a block of trajectory columns.
struct Drift {
  const IsingOperator& op;
  double decay;

  void operator()(double h, const Matrix& in, Matrix& out) const {
    op.apply(h, in, out);
    out = cplx(0, -1) * out - decay * in;
  }
};

struct Block {
  Eigen::Index first = 0, cols = 0;
};

/// Advances a column block of trajectories from step s0 to s1.
void advance_block(const Dynamics& dyn, const IsingOperator& op, Matrix& psi, std::vector<int>& jumps,
                   std::vector<Rng>& rngs, Block blk, long s0, long s1) {
  if (blk.cols == 0) return;
  const Drift drift{op, 0.5 * dyn.gamma * dyn.n};
  const Eigen::Index d = psi.rows();
  Matrix x = psi.middleCols(blk.first, blk.cols);
  Matrix k1(d, blk.cols), k2(d, blk.cols), k3(d, blk.cols), k4(d, blk.cols), tmp(d, blk.cols);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> site(0, dyn.n - 1);
  const double dt = dyn.dt;
  for (long s = s0; s < s1; ++s) {
    const double t = static_cast<double>(s) * dt;
    const double h0 = dyn.field(t), hm = dyn.field(t + 0.5 * dt), h1 = dyn.field(t + dt);
    drift(h0, x, k1);
    tmp = x + 0.5 * dt * k1;
    drift(hm, tmp, k2);
    tmp = x + 0.5 * dt * k2;
    drift(hm, tmp, k3);
    tmp = x + dt * k3;
    drift(h1, tmp, k4);
    tmp = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    for (Eigen::Index c = 0; c < blk.cols; ++c) {
      const auto traj = static_cast<std::size_t>(blk.first + c);
      const double norm2 = tmp.col(c).squaredNorm();
      bool jump = false;
      if (dyn.gamma > 0) jump = unif(rngs[traj]) < 1.0 - norm2 || norm2 < 1e-300;
      if (jump) {
        const int q = site(rngs[traj]);
        const std::size_t m = mask(dyn.n, q);
        for (Eigen::Index j = 0; j < d; ++j) {
          if (static_cast<std::size_t>(j) & m) x(j, c) = -x(j, c);
        }
        x.col(c).normalize();
        ++jumps[traj];
      } else {
        x.col(c) = tmp.col(c) / std::sqrt(norm2);
      }
    }
  }
  psi.middleCols(blk.first, blk.cols) = x;
}

}  // namespace

void QuenchProtocol::validate() const {
  if (t_up < 0 || t_hold < 0 || t_down < 0) throw std::invalid_argument("protocol durations must be non-negative");
  if (!(dt > 0) || dt > 0.05) throw std::invalid_argument("dt must lie in (0, 0.05]");
  if (n_traj < 1) throw std::invalid_argument("n_traj must be at least 1");
  if (gamma < 0) throw std::invalid_argument("gamma must be non-negative");
}

double ramp(double t, const QuenchProtocol& p) {
  if (t < 0) throw std::invalid_argument("ramp: t must be non-negative");
  if (t < p.t_up) return p.h_max * t / p.t_up;
  if (t <= p.t_up + p.t_hold) return p.h_max;
  if (t < p.total()) return p.h_max * (p.total() - t) / p.t_down;
  return 0.0;
}

std::vector<std::pair<int, int>> bonds(const HamiltonianSpec& spec) {
  check_size(spec.n);
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i + 1 < spec.n; ++i) out.emplace_back(i, i + 1);
  if (spec.periodic && spec.n >= 2) out.emplace_back(spec.n - 1, 0);
  return out;
}

IsingOperator::IsingOperator(int n, double J, bool periodic) : n_(n) {
  const auto bs = bonds(HamiltonianSpec{n, periodic, 0.0});
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << n);
  zz_.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double e = 0;
    for (auto [a, b] : bs) e += z_of(static_cast<std::size_t>(j), n, a) * z_of(static_cast<std::size_t>(j), n, b);
    zz_(j) = -J * e;
  }
}

void IsingOperator::apply(double h, const Matrix& in, Matrix& out) const {
  const Eigen::Index d = dim();
  out.resize(d, in.cols());
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    const cplx* x = in.col(c).data();
    cplx* y = out.col(c).data();
    for (Eigen::Index j = 0; j < d; ++j) {
      cplx flips = 0;
      for (int q = 0; q < n_; ++q) flips += x[static_cast<std::size_t>(j) ^ mask(n_, q)];
      y[j] = zz_(j) * x[j] + h * flips;
    }
  }
}

Matrix build_hamiltonian(const HamiltonianSpec& spec, double J) {
  check_size(spec.n);
  const IsingOperator op(spec.n, J, spec.periodic);
  Matrix h;
  op.apply(spec.field_value, Matrix::Identity(op.dim(), op.dim()), h);
  if (!is_hermitian(h, 1e-12)) throw std::logic_error("assembled Hamiltonian is not Hermitian");
  return h;
}

Vector all_down(int n) {
  check_size(n);
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << n);
  Vector v = Vector::Zero(d);
  v(d - 1) = 1.0;
  return v;
}

Dynamics Dynamics::from(const QuenchProtocol& proto, int n) {
  proto.validate();
  check_size(n);
  return Dynamics{n, proto.J, proto.gamma, proto.dt, [proto](double t) { return ramp(t, proto); }};
}

// ---------------------------------------------------------------------------

LindbladIntegrator::LindbladIntegrator(Dynamics dyn, Matrix rho0, double t0)
    : dyn_(std::move(dyn)), op_(dyn_.n, dyn_.J), rho_(std::move(rho0)), t0_(t0) {
  if (!dyn_.field) throw std::invalid_argument("dynamics needs a field function");
  if (!(dyn_.dt > 0)) throw std::invalid_argument("dt must be positive");
  const Eigen::Index d = op_.dim();
  if (rho_.rows() != d || rho_.cols() != d) throw std::invalid_argument("initial state has the wrong dimension");
  decay_.resize(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) {
      decay_(j, k) = -2.0 * dyn_.gamma * std::popcount(static_cast<std::size_t>(j ^ k));
    }
  }
}

void LindbladIntegrator::rhs(double t, const Matrix& in, Matrix& out) const {
  // Stages are Hermitian, so rho H = (H rho)^†.
  Matrix a;
  op_.apply(dyn_.field(t), in, a);
  out = cplx(0, -1) * (a - a.adjoint());
  out += decay_.cwiseProduct(in.real()).cast<cplx>() + cplx(0, 1) * decay_.cwiseProduct(in.imag()).cast<cplx>();
}

void LindbladIntegrator::step() {
  const double t = time(), dt = dyn_.dt;
  const cplx tr0 = rho_.trace();
  rhs(t, rho_, k1_);
  tmp_ = rho_ + 0.5 * dt * k1_;
  rhs(t + 0.5 * dt, tmp_, k2_);
  tmp_ = rho_ + 0.5 * dt * k2_;
  rhs(t + 0.5 * dt, tmp_, k3_);
  tmp_ = rho_ + dt * k3_;
  rhs(t + dt, tmp_, k4_);
  rho_ += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  ++steps_;
  const cplx tr = rho_.trace();
  if (!std::isfinite(tr.real()) || std::abs(tr - tr0) > 1e-6) {
    std::ostringstream msg;
    msg << "Lindblad integration unstable at t=" << time() << ": trace drifted from " << tr0.real() << " to "
        << tr.real() << " (dt=" << dt << ")";
    throw std::runtime_error(msg.str());
  }
}

void LindbladIntegrator::advance_to(double t) {
  const long target = grid_index(t, t0_, dyn_.dt);
  if (target < steps_) throw std::invalid_argument("cannot integrate backwards in time");
  while (steps_ < target) step();
}

Matrix lindblad_step(const Matrix& rho, double t, const QuenchProtocol& proto, int n) {
  LindbladIntegrator li(Dynamics::from(proto, n), rho, t);
  li.step();
  return li.rho();
}

// ---------------------------------------------------------------------------

Matrix TrajectoryEnsemble::density() const {
  Matrix rho = states * states.adjoint();
  return rho / static_cast<double>(n_traj());
}

void mcwf_run(const Dynamics& dyn, const McwfOptions& opts, const std::vector<double>& checkpoints,
              const std::function<void(const TrajectoryEnsemble&)>& on_checkpoint) {
  check_size(dyn.n);
  if (!dyn.field) throw std::invalid_argument("dynamics needs a field function");
  if (!(dyn.dt > 0)) throw std::invalid_argument("dt must be positive");
  if (dyn.gamma < 0) throw std::invalid_argument("gamma must be non-negative");
  if (opts.n_traj < 1) throw std::invalid_argument("n_traj must be at least 1");
  std::vector<long> stops;
  for (double t : checkpoints) {
    if (t < 0) throw std::invalid_argument("checkpoints must be non-negative");
    stops.push_back(grid_index(t, 0.0, dyn.dt));
    if (stops.size() > 1 && stops.back() < stops[stops.size() - 2]) {
      throw std::invalid_argument("checkpoints must be sorted");
    }
  }

  const IsingOperator op(dyn.n, dyn.J);
  TrajectoryEnsemble ens;
  ens.states = all_down(dyn.n).replicate(1, opts.n_traj);
  ens.jumps.assign(static_cast<std::size_t>(opts.n_traj), 0);
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(opts.n_traj));
  for (int i = 0; i < opts.n_traj; ++i) rngs.emplace_back(split_seed(opts.seed, static_cast<std::uint64_t>(i)));

  const int workers = std::max(1, std::min(opts.threads, opts.n_traj));
  std::vector<Block> blocks;
  for (int w = 0; w < workers; ++w) {
    const Eigen::Index a = static_cast<Eigen::Index>(opts.n_traj) * w / workers;
    const Eigen::Index b = static_cast<Eigen::Index>(opts.n_traj) * (w + 1) / workers;
    blocks.push_back({a, b - a});
  }

  long done = 0;
  for (std::size_t i = 0; i < stops.size(); ++i) {
    if (stops[i] > done) {
      if (workers == 1) {
        advance_block(dyn, op, ens.states, ens.jumps, rngs, blocks[0], done, stops[i]);
      } else {
        std::vector<std::future<void>> fs;
        for (const Block& blk : blocks) {
          fs.push_back(std::async(std::launch::async, [&, blk] {
            advance_block(dyn, op, ens.states, ens.jumps, rngs, blk, done, stops[i]);
          }));
        }
        for (auto& f : fs) f.get();
      }
      done = stops[i];
    }
    ens.t = checkpoints[i];
    on_checkpoint(ens);
  }
}

std::vector<TrajectoryEnsemble> mcwf_run(const Dynamics& dyn, const McwfOptions& opts,
                                         const std::vector<double>& checkpoints) {
  std::vector<TrajectoryEnsemble> out;
  mcwf_run(dyn, opts, checkpoints, [&](const TrajectoryEnsemble& e) { out.push_back(e); });
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct DiagonalTables {
  RealVector mean_z, nn;
};

DiagonalTables diagonal_tables(int n) {
  const auto bs = bonds(HamiltonianSpec{n, true, 0.0});
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << n);
  DiagonalTables t{RealVector::Zero(d), RealVector::Zero(d)};
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto u = static_cast<std::size_t>(j);
    for (int q = 0; q < n; ++q) t.mean_z(j) += z_of(u, n, q);
    for (auto [a, b] : bs) t.nn(j) += z_of(u, n, a) * z_of(u, n, b);
  }
  t.mean_z /= n;
  if (!bs.empty()) t.nn /= static_cast<double>(bs.size());
  return t;
}

/// (1/n) sum_q <psi| X_q |psi> for each column.
RealVector mean_x_columns(const Matrix& psi, int n) {
  RealVector out = RealVector::Zero(psi.cols());
  for (Eigen::Index c = 0; c < psi.cols(); ++c) {
    const cplx* x = psi.col(c).data();
    double s = 0;
    for (Eigen::Index j = 0; j < psi.rows(); ++j) {
      for (int q = 0; q < n; ++q) s += (std::conj(x[j]) * x[static_cast<std::size_t>(j) ^ mask(n, q)]).real();
    }
    out(c) = s / n;
  }
  return out;
}

void check_dim(Eigen::Index d, int n) {
  check_size(n);
  if (d != static_cast<Eigen::Index>(std::size_t{1} << n)) throw std::invalid_argument("state dimension does not match n");
}

}  // namespace

Observables observables(const Matrix& rho, int n) {
  check_dim(rho.rows(), n);
  const DiagonalTables t = diagonal_tables(n);
  const RealVector pop = rho.diagonal().real();
  Observables o;
  o.mean_Z = pop.dot(t.mean_z);
  o.nn_corr = pop.dot(t.nn);
  double x = 0;
  for (Eigen::Index j = 0; j < rho.rows(); ++j) {
    for (int q = 0; q < n; ++q) x += rho(j, static_cast<Eigen::Index>(static_cast<std::size_t>(j) ^ mask(n, q))).real();
  }
  o.mean_X = x / n;
  o.purity = rho.squaredNorm();
  return o;
}

Observables observables(const TrajectoryEnsemble& ens, int n) {
  check_dim(ens.states.rows(), n);
  const DiagonalTables t = diagonal_tables(n);
  const Eigen::MatrixXd pop = ens.states.cwiseAbs2();
  const double w = ens.weight();
  Observables o;
  o.mean_Z = w * (t.mean_z.transpose() * pop).sum();
  o.nn_corr = w * (t.nn.transpose() * pop).sum();
  o.mean_X = w * mean_x_columns(ens.states, n).sum();
  o.purity = (ens.states.adjoint() * ens.states).squaredNorm() * w * w;
  return o;
}

RealVector site_z(const Matrix& rho, int n) {
  check_dim(rho.rows(), n);
  RealVector out = RealVector::Zero(n);
  for (Eigen::Index j = 0; j < rho.rows(); ++j) {
    for (int q = 0; q < n; ++q) out(q) += z_of(static_cast<std::size_t>(j), n, q) * rho(j, j).real();
  }
  return out;
}

SiteMagnetization site_z(const TrajectoryEnsemble& ens, int n) {
  check_dim(ens.states.rows(), n);
  const Eigen::MatrixXd pop = ens.states.cwiseAbs2();
  Eigen::MatrixXd z(n, ens.n_traj());  // per-site, per-trajectory
  for (int q = 0; q < n; ++q) {
    RealVector sign(pop.rows());
    for (Eigen::Index j = 0; j < pop.rows(); ++j) sign(j) = z_of(static_cast<std::size_t>(j), n, q);
    z.row(q) = sign.transpose() * pop;
  }
  SiteMagnetization m;
  m.mean = z.rowwise().mean();
  m.std_error = RealVector::Zero(n);
  const double t = ens.n_traj();
  if (ens.n_traj() > 1) {
    for (int q = 0; q < n; ++q) {
      const double var = (z.row(q).array() - m.mean(q)).square().sum() / (t - 1);
      m.std_error(q) = std::sqrt(var / t);
    }
  }
  return m;
}

}  // namespace hsq
