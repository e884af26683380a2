#include "hsq/random.hpp"

#include <stdexcept>

namespace hsq {

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cplx(g(rng), g(rng));
  }
  return m;
}

PureState random_pure(int n_qubits, Rng& rng) {
  return PureState::normalized(ginibre(Eigen::Index{1} << n_qubits, 1, rng).col(0));
}

DensityOp random_mixed(int n_qubits, int rank, Rng& rng) {
  if (rank < 1) throw std::invalid_argument("random_mixed: rank must be positive");
  Matrix g = ginibre(Eigen::Index{1} << n_qubits, rank, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityOp::trusted(0.5 * (rho + rho.adjoint()));
}

Matrix random_isometry(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  if (cols > rows) throw std::invalid_argument("random_isometry: cols exceed rows");
  Eigen::HouseholderQR<Matrix> qr(ginibre(rows, cols, rng));
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  // Fix column phases so the distribution is Haar.
  const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double a = std::abs(r(j, j));
    if (a > 0) q.col(j) *= r(j, j) / a;
  }
  return q;
}

PureState random_product_pure(int n_qubits, Rng& rng) {
  PureState out = random_pure(1, rng);
  for (int q = 1; q < n_qubits; ++q) out = tensor_product(out, random_pure(1, rng), 30);
  return out;
}

}  // namespace hsq
