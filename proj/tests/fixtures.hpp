#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <random>

#include "hsq/measures.hpp"
#include "hsq/random.hpp"
#include "hsq/squashed.hpp"

namespace fixtures {

using namespace hsq;

/// Trace distance between rho and the average of k pure states drawn from its eigen-ensemble:
/// the sampling error of an ideal unraveling with k trajectories.
inline double sampling_floor(const Matrix& rho, int k, Rng& rng) {
  const auto e = eigh(rho);
  std::vector<double> w;
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i) w.push_back(std::max(0.0, e.eigenvalues(i)));
  std::discrete_distribution<int> pick(w.begin(), w.end());
  Matrix avg = Matrix::Zero(rho.rows(), rho.cols());
  for (int s = 0; s < k; ++s) {
    const Vector v = e.eigenvectors.col(pick(rng));
    avg += v * v.adjoint();
  }
  return trace_distance(Matrix(avg / k), rho);
}

/// sum_x p_x (product pure state)_x, with the flag extension as its known squashing extension.
inline EnsembleDecomp product_mixture(int n, int terms, Rng& rng) {
  EnsembleDecomp d;
  std::uniform_real_distribution<double> u(0.2, 1.0);
  double total = 0;
  for (int i = 0; i < terms; ++i) {
    d.weights.push_back(u(rng));
    total += d.weights.back();
    d.states.push_back(random_product_pure(n, rng).amplitudes());
  }
  for (double& w : d.weights) w /= total;
  return d;
}

}  // namespace fixtures
