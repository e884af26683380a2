#pragma once

#include <cstdint>
#include <random>

#include "hsq/qstate.hpp"

namespace hsq {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent stream seeds from a master seed.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

/// Complex Gaussian entries with unit variance.
Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng);
/// Haar-random pure state.
PureState random_pure(int n_qubits, Rng& rng);
/// Induced-measure mixed state of rank at most `rank`.
DensityOp random_mixed(int n_qubits, int rank, Rng& rng);
/// Columns form a Haar-random isometry C^cols -> C^rows.
Matrix random_isometry(Eigen::Index rows, Eigen::Index cols, Rng& rng);
/// Tensor product of independent Haar-random single-qubit states.
PureState random_product_pure(int n_qubits, Rng& rng);

}  // namespace hsq
