#include "doctest.h"

#include <map>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "fixtures.hpp"
#include "hsq/ising.hpp"

using namespace hsq;

namespace {

Matrix pauli(char p) {
  Matrix m = Matrix::Zero(2, 2);
  if (p == 'X') m(0, 1) = m(1, 0) = 1.0;
  if (p == 'Z') m(0, 0) = 1.0, m(1, 1) = -1.0;
  if (p == 'I') m = Matrix::Identity(2, 2);
  return m;
}

/// Kronecker-product assembly of a Pauli string; `ops` maps site -> Pauli letter.
Matrix pauli_string(int n, const std::map<int, char>& ops) {
  Matrix out = Matrix::Identity(1, 1);
  for (int q = 0; q < n; ++q) {
    auto it = ops.find(q);
    Matrix next = Eigen::kroneckerProduct(out, pauli(it == ops.end() ? 'I' : it->second));
    out = next;
  }
  return out;
}

Matrix reference_hamiltonian(int n, double J, double h) {
  const auto d = static_cast<Eigen::Index>(1) << n;
  Matrix out = Matrix::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    out -= J * pauli_string(n, {{i, 'Z'}, {(i + 1) % n, 'Z'}});
    out += h * pauli_string(n, {{i, 'X'}});
  }
  return out;
}

Dynamics constant(int n, double J, double gamma, double h, double dt = 0.02) {
  return Dynamics{n, J, gamma, dt, [h](double) { return h; }};
}

Matrix projector(const Vector& v) { return v * v.adjoint(); }

}  // namespace

TEST_CASE("ramp protocol") {
  QuenchProtocol p;
  CHECK(ramp(0, p) == 0.0);
  CHECK(std::abs(ramp(75, p) - 1.0) < 1e-12);
  CHECK(ramp(150, p) == 2.0);
  CHECK(ramp(160, p) == 2.0);
  CHECK(ramp(170, p) == 2.0);
  CHECK(std::abs(ramp(245, p) - 1.0) < 1e-12);
  CHECK(std::abs(ramp(320, p)) < 1e-12);
  CHECK(ramp(400, p) == 0.0);
  CHECK(p.total() == 320.0);
  CHECK_THROWS(ramp(-1, p));

  p.validate();
  QuenchProtocol bad = p;
  bad.dt = 0.1;
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.t_hold = -1;
  CHECK_THROWS(bad.validate());
  bad = p;
  bad.n_traj = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("Hamiltonian assembly") {
  CHECK(bonds(HamiltonianSpec{8, true, 0}).size() == 8);
  CHECK(bonds(HamiltonianSpec{8, false, 0}).size() == 7);
  CHECK(bonds(HamiltonianSpec{2, true, 0}).size() == 2);
  CHECK_THROWS(build_hamiltonian(HamiltonianSpec{13, true, 0}));

  const Vector psi0 = all_down(8);
  CHECK(std::abs(psi0(255) - 1.0) < 1e-15);
  for (double h : {0.0, 0.7, 2.0}) {
    const Matrix H = build_hamiltonian(HamiltonianSpec{8, true, h});
    CHECK(is_hermitian(H, 1e-12));
    CHECK(std::abs(psi0.dot(H * psi0) - (-8.0)) < 1e-12);
  }
  const Matrix H0 = build_hamiltonian(HamiltonianSpec{8, true, 0});
  CHECK((H0 * psi0 + 8.0 * psi0).norm() < 1e-12);

  for (int n : {3, 4, 5}) {
    CHECK((build_hamiltonian(HamiltonianSpec{n, true, 1.3}, 0.8) - reference_hamiltonian(n, 0.8, 1.3)).norm() < 1e-12);
  }

  const double h = 0.7;
  const RealVector spec = eigh(build_hamiltonian(HamiltonianSpec{2, true, h})).eigenvalues;
  std::vector<double> got(spec.data(), spec.data() + spec.size());
  std::sort(got.begin(), got.end());
  const double r = 2.0 * std::sqrt(1.0 + h * h);
  const std::vector<double> want{-r, -2.0, 2.0, r};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(got[static_cast<std::size_t>(i)] - want[static_cast<std::size_t>(i)]) < 1e-12);
}

TEST_CASE("observables on the initial state") {
  const Matrix rho = projector(all_down(8));
  auto o = observables(rho, 8);
  CHECK(o.mean_Z == doctest::Approx(-1.0));
  CHECK(std::abs(o.mean_X) < 1e-15);
  CHECK(o.nn_corr == doctest::Approx(1.0));
  CHECK(o.purity == doctest::Approx(1.0));

  Vector plus = Vector::Constant(4, 0.5);
  auto op = observables(projector(plus), 2);
  CHECK(op.mean_X == doctest::Approx(1.0));
  CHECK(std::abs(op.mean_Z) < 1e-15);
  CHECK(std::abs(op.nn_corr) < 1e-15);
  CHECK_THROWS(observables(rho, 7));
}

TEST_CASE("Lindblad integration") {
  SUBCASE("closed system conserves energy") {
    const int n = 5;
    const double h = 1.3;
    Rng rng(2);
    const Vector psi = random_pure(n, rng).amplitudes();
    LindbladIntegrator li(constant(n, 1.0, 0.0, h), projector(psi));
    const Matrix H = build_hamiltonian(HamiltonianSpec{n, true, h});
    const double e0 = (H * li.rho()).trace().real();
    li.advance_to(10.0);
    CHECK(std::abs((H * li.rho()).trace().real() - e0) < 1e-6);
    CHECK(std::abs(li.rho().trace() - 1.0) < 1e-9);
    CHECK(observables(li.rho(), n).purity == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("single-qubit dephasing") {
    const double gamma = 0.35;
    Vector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    LindbladIntegrator li(constant(1, 0.0, gamma, 0.0), projector(plus));
    li.advance_to(1.0);
    CHECK(std::abs(li.rho()(0, 1).real() - 0.5 * std::exp(-2 * gamma)) < 1e-4);
    CHECK(std::abs(li.time() - 1.0) < 1e-12);
  }
  SUBCASE("all-down is stationary at h = 0") {
    const Matrix rho0 = projector(all_down(4));
    LindbladIntegrator li(constant(4, 1.0, 0.5, 0.0), rho0);
    li.advance_to(5.0);
    CHECK((li.rho() - rho0).norm() < 1e-12);
  }
  SUBCASE("trace, Hermiticity, positivity and purity along the protocol") {
    QuenchProtocol p;
    p.t_up = 6;
    p.t_hold = 2;
    p.t_down = 6;
    LindbladIntegrator li(Dynamics::from(p, 4), projector(all_down(4)));
    double prev = 1.0;
    for (double t = 1.0; t <= 14.0; t += 1.0) {
      li.advance_to(t);
      const Matrix& r = li.rho();
      CHECK(std::abs(r.trace() - 1.0) < 1e-9);
      CHECK(is_hermitian(r, 1e-12));
      CHECK(eigh(r).eigenvalues.minCoeff() > -1e-9);
      const double pur = observables(r, 4).purity;
      CHECK(pur <= prev + 1e-8);
      prev = pur;
    }
    CHECK_THROWS(li.advance_to(3.0));
    CHECK_THROWS(li.advance_to(14.011));
  }
  SUBCASE("single step wrapper") {
    QuenchProtocol p;
    const Matrix rho = lindblad_step(projector(all_down(3)), 40.0, p, 3);
    CHECK(std::abs(rho.trace() - 1.0) < 1e-9);
    CHECK(is_hermitian(rho, 1e-12));
  }
  SUBCASE("instability is detected") {
    LindbladIntegrator li(constant(3, 1.0, 0.5, 40.0, 1.0), projector(all_down(3)));
    CHECK_THROWS_AS(li.advance_to(500.0), std::runtime_error);
  }
}

TEST_CASE("MCWF without noise is Schrodinger evolution") {
  const int n = 4;
  const Dynamics dyn = constant(n, 1.0, 0.0, 0.9, 0.005);
  auto ens = mcwf_run(dyn, {3, 1, 1}, {5.0});
  const Matrix H = build_hamiltonian(HamiltonianSpec{n, true, 0.9});
  const Matrix u = (cplx(0, -5.0) * H).exp();
  const Vector exact = u * all_down(n);
  for (int i = 0; i < 3; ++i) {
    CHECK(ens[0].jumps[static_cast<std::size_t>(i)] == 0);
    CHECK(std::abs(ens[0].state(i).norm() - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(exact.dot(ens[0].state(i))) - 1.0) < 1e-6);
  }
  LindbladIntegrator li(dyn, projector(all_down(n)));
  li.advance_to(5.0);
  CHECK(trace_distance(projector(exact), li.rho()) < 1e-6);
}

TEST_CASE("MCWF jump statistics") {
  const int n = 4, k = 300;
  const double gamma = 0.5, t = 4.0;
  auto ens = mcwf_run(constant(n, 1.0, gamma, 0.8), {k, 5, 1}, {t});
  double mean = 0;
  for (int j : ens[0].jumps) mean += j;
  mean /= k;
  const double expect = gamma * n * t;
  CHECK(std::abs(mean - expect) < 3.0 * std::sqrt(expect / k));
}

TEST_CASE("MCWF ensemble agrees with the Lindblad oracle") {
  const int n = 4, k = 200;
  QuenchProtocol p;
  const Dynamics dyn = Dynamics::from(p, n);
  const std::vector<double> cps{0.0, 2.0, 10.0, 30.0, 60.0};
  auto ens = mcwf_run(dyn, {k, 11, 1}, cps);
  LindbladIntegrator li(dyn, projector(all_down(n)));
  Rng rng(99);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    CAPTURE(cps[i]);
    li.advance_to(cps[i]);
    const Matrix avg = ens[i].density();
    CHECK(std::abs(avg.trace() - 1.0) < 1e-8);
    for (int c = 0; c < k; ++c) CHECK(std::abs(ens[i].state(c).norm() - 1.0) < 1e-8);
    const double td = trace_distance(avg, li.rho());
    double floor = 0;
    for (int r = 0; r < 20; ++r) floor = std::max(floor, fixtures::sampling_floor(li.rho(), k, rng));
    MESSAGE("t=" << cps[i] << " trace distance " << td << ", sampling floor " << floor);
    CHECK(td <= std::max(1.5 * floor, 0.05));
    CHECK(td <= 3.0 / std::sqrt(static_cast<double>(k)));

    const auto exact = observables(li.rho(), n);
    const auto est = observables(ens[i], n);
    const double sigma = 1.0 / std::sqrt(static_cast<double>(k));
    CHECK(std::abs(exact.mean_Z - est.mean_Z) < 4 * sigma);
    CHECK(std::abs(exact.mean_X - est.mean_X) < 4 * sigma);
    CHECK(std::abs(exact.nn_corr - est.nn_corr) < 4 * sigma);
  }
}

TEST_CASE("ensemble observables match the averaged density") {
  auto ens = mcwf_run(Dynamics::from(QuenchProtocol{}, 5), {40, 3, 1}, {20.0});
  const auto a = observables(ens[0], 5);
  const auto b = observables(ens[0].density(), 5);
  CHECK(std::abs(a.mean_Z - b.mean_Z) < 1e-12);
  CHECK(std::abs(a.mean_X - b.mean_X) < 1e-12);
  CHECK(std::abs(a.nn_corr - b.nn_corr) < 1e-12);
  CHECK(std::abs(a.purity - b.purity) < 1e-12);
  const RealVector sz = site_z(ens[0].density(), 5);
  CHECK((site_z(ens[0], 5).mean - sz).norm() < 1e-12);
}

TEST_CASE("translation symmetry") {
  const int n = 5;
  QuenchProtocol p;
  const Dynamics dyn = Dynamics::from(p, n);
  LindbladIntegrator li(dyn, projector(all_down(n)));
  li.advance_to(40.0);
  const RealVector exact = site_z(li.rho(), n);
  CHECK(exact.maxCoeff() - exact.minCoeff() < 1e-8);

  auto ens = mcwf_run(dyn, {300, 13, 1}, {40.0});
  const auto m = site_z(ens[0], n);
  for (int q = 1; q < n; ++q) {
    const double se = std::hypot(m.std_error(0), m.std_error(q));
    CHECK(std::abs(m.mean(q) - m.mean(0)) < 4 * se + 1e-12);
  }
}

TEST_CASE("MCWF determinism and checkpoint validation") {
  QuenchProtocol p;
  const Dynamics dyn = Dynamics::from(p, 4);
  auto a = mcwf_run(dyn, {30, 42, 1}, {1.0, 7.0});
  auto b = mcwf_run(dyn, {30, 42, 1}, {1.0, 7.0});
  auto c = mcwf_run(dyn, {30, 42, 3}, {1.0, 7.0});
  auto d = mcwf_run(dyn, {30, 43, 1}, {1.0, 7.0});
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a[i].states == b[i].states);
    CHECK(a[i].states == c[i].states);
    CHECK(a[i].jumps == c[i].jumps);
  }
  CHECK(a[1].states != d[1].states);

  CHECK_THROWS(mcwf_run(dyn, {30, 42, 1}, {5.0, 1.0}));
  CHECK_THROWS(mcwf_run(dyn, {30, 42, 1}, {0.013}));
  CHECK_THROWS(mcwf_run(dyn, {0, 42, 1}, {1.0}));
}
