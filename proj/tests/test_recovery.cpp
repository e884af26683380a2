#include "doctest.h"

#include <unsupported/Eigen/KroneckerProduct>

#include "hsq/measures.hpp"
#include "hsq/random.hpp"
#include "hsq/recovery.hpp"
#include "oracles.hpp"

using namespace hsq;

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out = Eigen::kroneckerProduct(a, b);
  return out;
}

Matrix projector(int dim, int i) {
  Matrix p = Matrix::Zero(dim, dim);
  p(i, i) = 1.0;
  return p;
}

/// sum_b p_b rho_A^b ⊗ |b><b| ⊗ rho_C^b with one-qubit A, B, C.
DensityOp markov_chain(Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.9);
  const double p = u(rng);
  Matrix m = Matrix::Zero(8, 8);
  for (int b = 0; b < 2; ++b) {
    const double w = b == 0 ? p : 1 - p;
    m += w * kron(kron(random_mixed(1, 2, rng).matrix(), projector(2, b)),
                  random_mixed(1, 2, rng).matrix());
  }
  return DensityOp(m);
}

DensityOp classical_chain() {
  Matrix m = Matrix::Zero(8, 8);
  m(0, 0) = m(7, 7) = 0.5;
  return DensityOp(m);
}

const RegionPartition kABC = RegionPartition::make(3, {0}, {1}, {2});

}  // namespace

TEST_CASE("channel construction and action") {
  CHECK_THROWS(Channel({Matrix::Identity(2, 2), Matrix::Identity(2, 2)}));
  CHECK_THROWS(Channel::dephasing(1.5));

  auto bell = DensityOp(make_ghz(2));
  const Qubits second{1};
  auto dep = apply_channel(bell, Channel::depolarizing(0.3), second);
  Matrix expect = 0.7 * bell.matrix() + 0.3 * Matrix::Identity(4, 4) / 4.0;
  CHECK((dep.matrix() - expect).norm() < 1e-12);

  auto replaced = apply_channel(bell, Channel::trace_and_replace(1), second);
  CHECK((replaced.matrix() - Matrix::Identity(4, 4) / 4.0).norm() < 1e-12);

  Rng rng(1);
  auto rho = random_mixed(3, 8, rng);
  const Qubits first{0};
  auto z = apply_channel(rho, Channel::dephasing(1.0), first);
  Matrix zz = Matrix::Identity(8, 8);
  zz.bottomRightCorner(4, 4) *= -1.0;
  CHECK((z.matrix() - zz * rho.matrix() * zz).norm() < 1e-12);

  auto two = Channel::tensor_power(Channel::dephasing(0.2), 2);
  CHECK(two.kraus().size() == 4);
  CHECK(two.in_dim() == 4);

  auto pt = Channel::partial_trace_last(2, 4);
  const int keep[1] = {0};
  CHECK((pt.apply(rho.matrix()) - tensor::reduce(rho.matrix(), {2, 4}, keep)).norm() < 1e-12);
}

TEST_CASE("petz_map recovers Markov chains and not GHZ") {
  auto rec = petz_recover(classical_chain(), kABC);
  CHECK(rec.fidelity >= 1 - 1e-8);
  CHECK(rec.trace_distance < 1e-7);

  Rng rng(8);
  auto a = random_mixed(1, 2, rng), b = random_mixed(1, 2, rng), c = random_mixed(1, 2, rng);
  auto prod = petz_recover(tensor_product(tensor_product(a, b), c), kABC);
  CHECK(prod.fidelity >= 1 - 1e-8);

  auto ghz = petz_recover(DensityOp(make_ghz(3)), kABC);
  CHECK(ghz.fidelity == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(ghz.qcmi == doctest::Approx(1.0));
  CHECK(-std::log2(ghz.fidelity) <= ghz.qcmi + 1e-9);

  // D is traced before recovering.
  auto ghz4 = DensityOp(make_ghz(4));
  auto p4 = RegionPartition::make(4, {0}, {1}, {2}, Qubits{3});
  CHECK(petz_recover(ghz4, p4).fidelity == doctest::Approx(1.0));
}

TEST_CASE("exact recovery iff the conditional mutual information vanishes") {
  Rng rng(77);
  for (int s = 0; s < 30; ++s) {
    auto m = markov_chain(rng);
    auto rec = petz_recover(m, kABC);
    CHECK(rec.qcmi < 1e-6);
    CHECK(rec.trace_distance < 1e-6);

    auto generic = random_mixed(3, 8, rng);
    auto rg = petz_recover(generic, kABC);
    CHECK(rg.qcmi > 1e-6);
    CHECK(rg.fidelity < 1 - 1e-6);
    CHECK(-std::log2(rg.fidelity) >= 0.0);
  }
}

TEST_CASE("Petz map is CP and trace preserving on full-support references") {
  Rng rng(200);
  for (int s = 0; s < 200; ++s) {
    auto rho = random_mixed(3, 8, rng);
    auto r = petz_map(rho, kABC);
    CHECK(r.in_dim() == 2);
    CHECK(r.out_dim() == 4);
    Matrix j = r.choi();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (j + j.adjoint()), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
    // tr_out J = I_in
    const int keep[1] = {0};
    CHECK((tensor::reduce(j, {2, 4}, keep) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("petz_general") {
  Rng rng(4);
  auto sigma = random_mixed(2, 2, rng);
  auto id = petz_general(sigma, Channel::identity(4));
  Matrix x = random_mixed(2, 4, rng).matrix();
  Matrix proj = support_projector(sigma.matrix());
  CHECK((id.apply(x) - proj * x * proj).norm() < 1e-8);
  CHECK((id.apply(sigma.matrix()) - sigma.matrix()).norm() < 1e-7);

  // R(E(sigma)) = sigma for a generic channel.
  const auto dep = Channel::tensor_power(Channel::depolarizing(0.4), 2);
  auto full = random_mixed(2, 3, rng);
  auto r = petz_general(full, dep);
  CHECK((r.apply(dep.apply(full.matrix())) - full.matrix()).norm() < 1e-7);

  // Commuting pair: DPI saturated and recovery exact.
  Matrix rd = Matrix::Zero(2, 2), sd = Matrix::Zero(2, 2);
  rd(0, 0) = 0.8;
  rd(1, 1) = 0.2;
  sd(0, 0) = 0.3;
  sd(1, 1) = 0.7;
  const auto deph = Channel::complete_dephasing(2);
  auto rc = petz_general(sd, deph);
  CHECK(relative_entropy(rd, sd) == doctest::Approx(relative_entropy(deph.apply(rd), deph.apply(sd))));
  CHECK(fidelity(rd, rc.apply(deph.apply(rd))) == doctest::Approx(1.0));

  // Noncommuting pair: DPI strict and recovery imperfect.
  Matrix plus = Matrix::Constant(2, 2, 0.5);
  CHECK(relative_entropy(plus, sd) > relative_entropy(deph.apply(plus), deph.apply(sd)) + 1e-3);
  CHECK(fidelity(plus, rc.apply(deph.apply(plus))) < 1 - 1e-3);

  // Depolarizing(0.3) on one half of a Bell pair, reference I/4.
  Matrix bell = DensityOp(make_ghz(2)).matrix();
  std::vector<Matrix> lifted;
  const Channel dep3 = Channel::depolarizing(0.3);
  for (const Matrix& k : dep3.kraus()) lifted.push_back(kron(Matrix::Identity(2, 2), k));
  const Channel on_second(lifted);
  auto rb = petz_general(DensityOp::maximally_mixed(2), on_second);
  const double f = fidelity(bell, rb.apply(on_second.apply(bell)));
  CHECK(f == doctest::Approx(0.6175).epsilon(1e-9));
  CHECK(relative_entropy(bell, Matrix::Identity(4, 4) / 4.0) >
        relative_entropy(on_second.apply(bell), Matrix::Identity(4, 4) / 4.0) + 1e-3);
}

TEST_CASE("recoverability_deficit") {
  Rng rng(31);
  auto part4 = RegionPartition::make(4, {0}, {1}, {2}, Qubits{3});

  auto rho = random_mixed(4, 3, rng);
  auto id = recoverability_deficit(rho, part4, Channel::identity(2));
  CHECK(std::abs(id.delta_qcmi) < 1e-9);
  CHECK(id.best_fidelity == doctest::Approx(1.0).epsilon(1e-8));

  DensityOp prod = random_mixed(1, 2, rng);
  for (int q = 1; q < 4; ++q) prod = tensor_product(prod, random_mixed(1, 2, rng));
  auto tr = recoverability_deficit(prod, part4, Channel::trace_and_replace(1));
  CHECK(std::abs(tr.delta_qcmi) < 1e-8);
  CHECK(tr.best_fidelity == doctest::Approx(1.0).epsilon(1e-7));

  auto ghz_d = tensor_product(DensityOp(make_ghz(3)), DensityOp(PureState::basis(1, 0)));
  auto dp = recoverability_deficit(ghz_d, part4, Channel::dephasing(0.5));
  REQUIRE(dp.per_extension.size() == 1);
  const auto& rep = dp.per_extension.front();
  CHECK(rep.delta_qcmi == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.fidelity == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.trace_distance == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.sandwich_holds);
  CHECK(rep.bound_holds);

  // A user-supplied extension is evaluated alongside the purification.
  ExtendedState trivial{ghz_d.matrix(), 4, 1};
  auto both = recoverability_deficit(ghz_d, part4, Channel::dephasing(0.5), {trivial});
  CHECK(both.per_extension.size() == 2);
  CHECK_THROWS(recoverability_deficit(ghz_d, part4, Channel::dephasing(0.5),
                                      {ExtendedState{rho.matrix(), 4, 1}}));

  // delta is nonnegative by data processing, and the sandwich holds.
  for (int s = 0; s < 10; ++s) {
    auto r = random_mixed(4, 2 + s % 3, rng);
    auto res = recoverability_deficit(r, part4, Channel::depolarizing(0.5));
    CHECK(res.delta_qcmi > -1e-9);
    for (const auto& e : res.per_extension) CHECK(e.sandwich_holds);
  }
}

TEST_CASE("iterate_recovery") {
  auto chain = iterate_recovery(classical_chain(), kABC, 3);
  CHECK(chain.state.n_qubits() == 5);
  const Qubits ac{0, 2};
  const Matrix target = partial_trace(classical_chain(), ac).matrix();
  for (int i = 1; i <= 3; ++i) CHECK(trace_distance(chain.marginal_ac(i).matrix(), target) < 1e-6);
  CHECK(std::abs(chain.state.matrix().trace().real() - 1.0) < 1e-9);

  Rng rng(5);
  auto a = random_mixed(1, 2, rng), b = random_mixed(1, 2, rng), c = random_mixed(1, 2, rng);
  auto prod = tensor_product(tensor_product(a, b), c);
  auto it = iterate_recovery(prod, kABC, 2);
  const Matrix ac_prod = kron(a.matrix(), c.matrix());
  CHECK(trace_distance(it.marginal_ac(1).matrix(), ac_prod) < 1e-6);
  CHECK(trace_distance(it.marginal_ac(2).matrix(), ac_prod) < 1e-6);
  // Copies of C are independent for a product state.
  const Qubits cc{2, 3};
  CHECK(trace_distance(partial_trace(it.state, cc).matrix(), kron(c.matrix(), c.matrix())) < 1e-6);

  for (int s = 0; s < 5; ++s) {
    auto m = markov_chain(rng);
    auto r = iterate_recovery(m, kABC, 2);
    const Matrix t = partial_trace(m, ac).matrix();
    CHECK(trace_distance(r.marginal_ac(1).matrix(), t) < 1e-6);
    CHECK(trace_distance(r.marginal_ac(2).matrix(), t) < 1e-6);
    CHECK(oracle::trace_distance(oracle::partial_trace(r.state.matrix(), 4, {0, 1, 2}), m.matrix()) <
          1e-6);
  }

  CHECK_THROWS_AS(iterate_recovery(DensityOp(make_ghz(3)), kABC, 2), std::domain_error);
}
