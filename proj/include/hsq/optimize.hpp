#pragma once

#include <functional>

#include "hsq/qstate.hpp"

namespace hsq {

struct SimplexOptions {
  double initial_step = 0.4;
  /// Stop when the best value improves by less than `tol` over `window` sweeps, one sweep being
  /// as many simplex steps as there are parameters.
  double tol = 1e-7;
  int window = 50;
  int max_evals = 4000;
};

struct SimplexResult {
  RealVector x;
  double value = 0;
  int evals = 0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead minimization (GSL nmsimplex2) started at x0.
SimplexResult nelder_mead(const std::function<double(const RealVector&)>& f, const RealVector& x0,
                          const SimplexOptions& opts);

/// Chart of m x r isometries around a base unitary Q: theta -> first r columns of Q exp(G(theta)),
/// G = [[X, -Y^†], [Y, 0]] with X anti-Hermitian r x r and Y (m-r) x r.
class StiefelChart {
public:
  /// `seed` must be an m x r isometry; theta = 0 maps back to it.
  explicit StiefelChart(const Matrix& seed);

  int rows() const { return static_cast<int>(base_.rows()); }
  int cols() const { return r_; }
  int n_params() const;
  Matrix at(const RealVector& theta) const;
  /// Moves the base point to at(theta).
  void recenter(const RealVector& theta);

private:
  Matrix generator(const RealVector& theta) const;

  Matrix base_;
  int r_;
};

/// Completes an isometry to a unitary whose leading columns are the isometry.
Matrix complete_to_unitary(const Matrix& isometry);

}  // namespace hsq
