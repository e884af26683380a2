#include "doctest.h"

#include <cmath>

#include "hsq/measures.hpp"
#include "hsq/random.hpp"
#include "oracles.hpp"

using namespace hsq;

namespace {

RegionPartition singles(int n) { return RegionPartition::make(n, {0}, {1}, {2}); }

Matrix diag(std::initializer_list<double> v) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

// Values computed by tests/oracles/derive_values.py (numpy, independent code).
constexpr double kH2Third = 0.9182958340544896;
constexpr double kH2Quarter = 0.8112781244591328;
constexpr double kQcmiW8 = 0.12455780279370421;
constexpr double kCont2 = 0.9800269059780251;
constexpr double kCont4 = 1.1800269059780253;
constexpr double kTau3W3 = 0.47140452079103196;

}  // namespace

TEST_CASE("entropy and binary entropy") {
  CHECK(entropy(DensityOp::maximally_mixed(1)).value == doctest::Approx(1.0));
  CHECK(entropy(DensityOp(make_w(4))).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(entropy(DensityOp(diag({2.0 / 3, 1.0 / 3}))).value == doctest::Approx(kH2Third).epsilon(1e-12));
  CHECK(binary_entropy(0.5) == 1.0);
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.25) == doctest::Approx(kH2Quarter).epsilon(1e-14));
  CHECK(binary_entropy(0.3) == doctest::Approx(binary_entropy(0.7)).epsilon(1e-15));
  CHECK_THROWS(binary_entropy(-0.1));
  CHECK_THROWS(binary_entropy(1.5));

  Rng rng(1);
  for (int s = 0; s < 50; ++s) {
    auto rho = random_mixed(3, 1 + s % 8, rng);
    double e = entropy(rho);
    CHECK(e >= -1e-9);
    CHECK(e <= 3.0 + 1e-8);
  }
}

TEST_CASE("qmi examples") {
  const Qubits a{0}, c{1};
  CHECK(qmi(DensityOp(make_ghz(2)), a, c).value == doctest::Approx(2.0));
  Rng rng(2);
  auto prod = tensor_product(random_mixed(1, 2, rng), random_mixed(1, 2, rng));
  CHECK(std::abs(qmi(prod, a, c).value) < 1e-12);
  CHECK(qmi(DensityOp(diag({0.5, 0, 0, 0.5})), a, c).value == doctest::Approx(1.0));
}

TEST_CASE("qcmi reproduces the GHZ/W comparison table") {
  CHECK(qcmi(DensityOp(make_ghz(3)), singles(3)).value == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(qcmi(DensityOp(make_w(3)), singles(3)).value == doctest::Approx(0.918).epsilon(1e-3));
  CHECK(qcmi(DensityOp(make_w(4)), singles(4)).value == doctest::Approx(0.377).epsilon(1e-3));
  CHECK(qcmi(DensityOp(make_w(5)), singles(5)).value == doctest::Approx(0.249).epsilon(1e-3));
  CHECK(table1_closed_form(4) == doctest::Approx(0.377).epsilon(1e-3));
  CHECK(table1_closed_form(5) == doctest::Approx(0.249).epsilon(1e-3));
  CHECK(std::abs(qcmi(make_w(8), singles(8)).value - kQcmiW8) < 1e-9);
  for (int n = 4; n <= 8; ++n) {
    CAPTURE(n);
    CHECK(std::abs(qcmi(make_ghz(n), singles(n)).value) < 1e-9);
    CHECK(std::abs(qcmi(make_w(n), singles(n)).value - table1_closed_form(n)) < 1e-9);
  }
  CHECK_THROWS(table1_closed_form(3));

  Rng rng(3);
  auto prod = tensor_product(random_mixed(1, 2, rng), tensor_product(random_mixed(1, 2, rng),
                                                                      random_mixed(1, 2, rng)));
  CHECK(std::abs(qcmi(prod, singles(3)).value) < 1e-10);
}

TEST_CASE("pure and mixed qcmi paths agree with the entropy oracle") {
  Rng rng(4);
  for (int s = 0; s < 30; ++s) {
    auto psi = random_pure(5, rng);
    auto part = RegionPartition::make(5, {0, 3}, {1}, {4});
    DensityOp rho(psi);
    double direct = oracle::qcmi(rho.matrix(), 5, {0, 3}, {1}, {4});
    CHECK(qcmi(psi, part).value == doctest::Approx(direct).epsilon(1e-9));
    CHECK(qcmi(rho, part).value == doctest::Approx(direct).epsilon(1e-9));
  }
  auto no_b = RegionPartition::make(3, {0}, {}, {2});
  auto psi = random_pure(3, rng);
  const Qubits a{0}, c{2};
  CHECK(qcmi(psi, no_b).value == doctest::Approx(qmi(DensityOp(psi), a, c).value).epsilon(1e-10));
}

TEST_CASE("tmi examples") {
  Rng rng(5);
  auto prod = tensor_product(random_mixed(1, 2, rng), tensor_product(random_mixed(1, 2, rng),
                                                                      random_mixed(1, 2, rng)));
  CHECK(std::abs(tmi(prod, singles(3)).value) < 1e-10);
  CHECK(std::abs(tmi(DensityOp(make_ghz(3)), singles(3)).value) < 1e-10);
  Matrix deph = Matrix::Zero(8, 8);
  deph(0, 0) = deph(7, 7) = 0.5;
  CHECK(tmi(DensityOp(deph), singles(3)).value == doctest::Approx(1.0));
}

TEST_CASE("negativity and tau3") {
  const Qubits a{0};
  CHECK(negativity(DensityOp(make_ghz(2)), a).value == doctest::Approx(0.5));
  CHECK(negativity(DensityOp(make_ghz(3)), a).value == doctest::Approx(0.5));
  Rng rng(6);
  auto sep = tensor_product(random_mixed(1, 2, rng), random_mixed(2, 4, rng));
  CHECK(std::abs(negativity(sep, a).value) < 1e-10);

  CHECK(tau3(DensityOp(make_ghz(3)), singles(3)).value == doctest::Approx(0.5));
  CHECK(tau3(DensityOp(make_w(3)), singles(3)).value == doctest::Approx(kTau3W3).epsilon(1e-10));
  auto bisep = tensor_product(random_mixed(1, 2, rng), DensityOp(make_ghz(2)));
  CHECK(tau3(bisep, singles(3)).value == 0.0);
}

TEST_CASE("tau3 vanishes whenever one cut is PPT") {
  Rng rng(7);
  for (int s = 0; s < 40; ++s) {
    // Mixture of products across a random cut i|jk.
    const int cut = s % 3;
    Matrix rho = Matrix::Zero(8, 8);
    for (int k = 0; k < 3; ++k) {
      auto single = random_mixed(1, 2, rng);
      auto pair = random_mixed(2, 4, rng);
      Matrix prod = tensor_product(single, pair).matrix();
      const int to_cut[3][3] = {{0, 1, 2}, {1, 0, 2}, {1, 2, 0}};
      Matrix placed = tensor::permute(prod, Dims{2, 2, 2}, to_cut[cut]);
      rho += placed / 3.0;
    }
    CAPTURE(cut);
    CHECK(tau3(DensityOp(rho), singles(3)).value == 0.0);
  }
}

TEST_CASE("fidelity, trace distance and the Fuchs-van de Graaf sandwich") {
  auto half = DensityOp::maximally_mixed(1);
  auto zero = DensityOp(PureState::basis(1, 0));
  auto one = DensityOp(PureState::basis(1, 1));
  CHECK(fidelity(half, half) == doctest::Approx(1.0));
  CHECK(fidelity(zero, one) == doctest::Approx(0.0));
  CHECK(fidelity(zero, half) == doctest::Approx(0.5));
  CHECK_THROWS(fidelity(zero, DensityOp::maximally_mixed(2)));

  Rng rng(8);
  for (int s = 0; s < 200; ++s) {
    auto r = random_mixed(2, 1 + s % 4, rng);
    auto t = random_mixed(2, 1 + (s / 4) % 4, rng);
    double f = fidelity(r, t);
    double td = trace_distance(r, t);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(1.0 - std::sqrt(f) <= td + 1e-8);
    CHECK(td <= std::sqrt(1.0 - f) + 1e-8);
    CHECK(td == doctest::Approx(oracle::trace_distance(r.matrix(), t.matrix())).epsilon(1e-10));
  }
}

TEST_CASE("relative entropy") {
  auto zero = DensityOp(PureState::basis(1, 0));
  auto half = DensityOp::maximally_mixed(1);
  CHECK(relative_entropy(zero.matrix(), half.matrix()) == doctest::Approx(1.0));
  CHECK(std::isinf(relative_entropy(half.matrix(), zero.matrix())));
  // I(A;B) = D(rho_AB || rho_A ⊗ rho_B)
  Rng rng(9);
  auto rho = random_mixed(2, 3, rng);
  const Qubits a{0}, b{1};
  Matrix prod = tensor_product(partial_trace(rho, a), partial_trace(rho, b)).matrix();
  CHECK(relative_entropy(rho.matrix(), prod) == doctest::Approx(qmi(rho, a, b).value).epsilon(1e-9));
}

TEST_CASE("continuity bound") {
  CHECK(continuity_bound(2, 0.0) == 0.0);
  CHECK(continuity_bound(2, 0.01) == doctest::Approx(kCont2).epsilon(1e-12));
  CHECK(continuity_bound(4, 0.01) == doctest::Approx(kCont4).epsilon(1e-12));
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    double v = continuity_bound(3, i / 1000.0);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
  CHECK_THROWS(continuity_bound(1, 0.1));
  CHECK_THROWS(continuity_bound(2, 1.5));
}

TEST_CASE("GHZ and W constructors") {
  const Qubits a{0};
  auto g1 = partial_trace(make_ghz(3), a);
  CHECK((g1.matrix() - Matrix::Identity(2, 2) / 2.0).norm() < 1e-15);
  auto w1 = partial_trace(make_w(3), a);
  CHECK((w1.matrix() - diag({2.0 / 3, 1.0 / 3})).norm() < 1e-15);
  Vector bell = Vector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  CHECK((make_ghz(2).amplitudes() - bell).norm() < 1e-15);
  CHECK_THROWS(make_ghz(1));
  CHECK_THROWS(make_w(2));
  auto w5 = make_w(5).amplitudes();
  int nonzero = 0;
  for (Eigen::Index i = 0; i < w5.size(); ++i) {
    if (std::abs(w5(i)) > 0) {
      ++nonzero;
      CHECK(std::abs(w5(i) - 1.0 / std::sqrt(5.0)) < 1e-15);
    }
  }
  CHECK(nonzero == 5);
}

TEST_CASE("strong subadditivity on random 4-qubit states") {
  Rng rng(10);
  for (int s = 0; s < 500; ++s) {
    auto rho = random_mixed(4, 1 + s % 16, rng);
    REQUIRE(qcmi(rho, singles(4)).value >= -1e-8);
  }
}

TEST_CASE("qcmi duality on pure four-party states") {
  Rng rng(11);
  for (int s = 0; s < 100; ++s) {
    auto psi = random_pure(5, rng);
    auto part = RegionPartition::make(5, {0}, {1, 2}, {3}, Qubits{4});
    auto dual = RegionPartition::make(5, {0}, {4}, {3}, Qubits{1, 2});
    CHECK(std::abs(qcmi(psi, part).value - qcmi(psi, dual).value) <= 1e-8);
  }
}

TEST_CASE("chain rule for conditional mutual information") {
  Rng rng(12);
  for (int s = 0; s < 100; ++s) {
    auto psi = random_pure(5, rng);
    // I(A1A2;C|B) = I(A1;C|B) + I(A2;C|B A1) with A1=0, A2=1, B=2, C=3, D=4
    double joint = qcmi(psi, RegionPartition::make(5, {0, 1}, {2}, {3})).value;
    double first = qcmi(psi, RegionPartition::make(5, {0}, {2}, {3})).value;
    double second = qcmi(psi, RegionPartition::make(5, {1}, {2, 0}, {3})).value;
    CHECK(std::abs(joint - first - second) <= 1e-8);
  }
}

TEST_CASE("asymptotic continuity of half-qcmi on pure states") {
  Rng rng(13);
  auto part = RegionPartition::make(4, {0}, {1}, {2});
  std::uniform_real_distribution<double> step(0.001, 0.3);
  for (int s = 0; s < 200; ++s) {
    auto psi = random_pure(4, rng);
    Vector dv = ginibre(16, 1, rng).col(0);
    auto phi = PureState::normalized(psi.amplitudes() + step(rng) * dv);
    double eps = trace_distance(DensityOp(psi), DensityOp(phi));
    if (eps > 1.0) eps = 1.0;
    double diff = std::abs(0.5 * qcmi(psi, part).value - 0.5 * qcmi(phi, part).value);
    CHECK(diff <= continuity_bound(2, eps) + 1e-12);
  }
}
