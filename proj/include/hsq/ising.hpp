#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "hsq/qstate.hpp"

namespace hsq {

/// Linear ramp 0 -> h_max over t_up, hold for t_hold, ramp back to 0 over t_down.
struct QuenchProtocol {
  double J = 1.0;
  double h_max = 2.0;
  double t_up = 150.0;
  double t_hold = 20.0;
  double t_down = 150.0;
  double gamma = 0.5;
  double dt = 0.02;
  int n_traj = 500;
  std::uint64_t seed = 1;

  double total() const { return t_up + t_hold + t_down; }
  void validate() const;
};

double ramp(double t, const QuenchProtocol& proto);

struct HamiltonianSpec {
  int n = 8;
  bool periodic = true;
  double field_value = 0.0;
};

/// Nearest-neighbour bonds; a periodic ring of n >= 2 sites has n of them.
std::vector<std::pair<int, int>> bonds(const HamiltonianSpec& spec);

/// Dense H = -J sum_<ij> Z_i Z_j + h sum_i X_i with h = spec.field_value.
Matrix build_hamiltonian(const HamiltonianSpec& spec, double J = 1.0);

/// Matrix-free form of the same Hamiltonian.
class IsingOperator {
public:
  IsingOperator(int n, double J, bool periodic = true);

  int n() const { return n_; }
  Eigen::Index dim() const { return zz_.size(); }
  /// Diagonal of the coupling term.
  const RealVector& zz_diagonal() const { return zz_; }
  /// out = H(h) in, column by column.
  void apply(double h, const Matrix& in, Matrix& out) const;

private:
  int n_;
  RealVector zz_;
};

/// |↓...↓>: every Z eigenvalue -1, basis index 2^n - 1.
Vector all_down(int n);

using Field = std::function<double(double)>;

/// Ising ring with uniform Z dephasing (jump operators sqrt(gamma) Z_i).
struct Dynamics {
  int n = 8;
  double J = 1.0;
  double gamma = 0.5;
  double dt = 0.02;
  Field field;

  static Dynamics from(const QuenchProtocol& proto, int n);
};

/// Fixed-step RK4 integration of the Lindblad equation on the full density matrix.
class LindbladIntegrator {
public:
  LindbladIntegrator(Dynamics dyn, Matrix rho0, double t0 = 0.0);

  /// One step of size dt. Throws std::runtime_error if the trace drifts by more than 1e-6.
  void step();
  /// Steps until time t (which must lie on the step grid).
  void advance_to(double t);
  double time() const { return t0_ + static_cast<double>(steps_) * dyn_.dt; }
  const Matrix& rho() const { return rho_; }
  DensityOp state() const { return DensityOp(rho_); }

private:
  void rhs(double t, const Matrix& in, Matrix& out) const;

  Dynamics dyn_;
  IsingOperator op_;
  Eigen::MatrixXd decay_;  // -2 gamma popcount(j xor k)
  Matrix rho_, k1_, k2_, k3_, k4_, tmp_;
  double t0_;
  long steps_ = 0;
};

/// Single RK4 step of the quench protocol's Lindblad equation from time t.
Matrix lindblad_step(const Matrix& rho, double t, const QuenchProtocol& proto, int n);

/// Trajectory states at one checkpoint, uniformly weighted.
struct TrajectoryEnsemble {
  double t = 0.0;
  Matrix states;  // dim x n_traj, unit columns
  std::vector<int> jumps;

  int n_traj() const { return static_cast<int>(states.cols()); }
  double weight() const { return 1.0 / n_traj(); }
  Matrix density() const;
  Vector state(int i) const { return states.col(i); }
};

struct McwfOptions {
  int n_traj = 500;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Monte Carlo wavefunction unraveling from |↓...↓>. Trajectory i draws from
/// Rng(split_seed(seed, i)), so results do not depend on the thread count.
void mcwf_run(const Dynamics& dyn, const McwfOptions& opts, const std::vector<double>& checkpoints,
              const std::function<void(const TrajectoryEnsemble&)>& on_checkpoint);
std::vector<TrajectoryEnsemble> mcwf_run(const Dynamics& dyn, const McwfOptions& opts,
                                         const std::vector<double>& checkpoints);

struct Observables {
  double mean_Z = 0, mean_X = 0, nn_corr = 0, purity = 0;
};

Observables observables(const Matrix& rho, int n);
Observables observables(const TrajectoryEnsemble& ens, int n);

/// Per-site <Z_i> with the standard error of the trajectory mean.
struct SiteMagnetization {
  RealVector mean, std_error;
};
RealVector site_z(const Matrix& rho, int n);
SiteMagnetization site_z(const TrajectoryEnsemble& ens, int n);

}  // namespace hsq
