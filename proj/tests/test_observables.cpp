#include "chiralsim/dynamics.hpp"
#include "chiralsim/observables.hpp"
#include "chiralsim/spectrum.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace chiralsim;

namespace {

CVector random_state(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  CVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = Complex(n(rng), n(rng));
  return v.normalized();
}

CMatrix projector(const CVector& v) { return v * v.adjoint(); }

}  // namespace

TEST_CASE("occupation mean and probability") {
  FockBasis b(2, 3);
  CVector psi = (b.ket({2, 0}) + b.ket({0, 1})) / std::sqrt(2.0);
  auto o = occupation(b, psi, 0);
  CHECK(o.mean == doctest::Approx(1.0));
  CHECK(o.probability == doctest::Approx(0.5));
  CHECK(occupation(b, projector(psi), 1).mean == doctest::Approx(0.5));
}

TEST_CASE("bond current signs") {
  FockBasis b(3, 2, 1);
  CVector real = (b.ket({1, 0, 0}) + b.ket({0, 1, 0})) / std::sqrt(2.0);
  CHECK(std::abs(bond_current(b, real, 0, 1, 0.0)) < 1e-15);
  // Relative phase +i on site 2 gives -1 with I = i(a1^dag a2 - h.c.).
  CVector twisted = (b.ket({1, 0, 0}) + kI * b.ket({0, 1, 0})) / std::sqrt(2.0);
  CHECK(bond_current(b, twisted, 0, 1, 0.0) == doctest::Approx(-1.0));
  CHECK(bond_current(b, twisted, 1, 0, 0.0) == doctest::Approx(1.0));
  CHECK(bond_current(b, real, 0, 1, kPi / 2) == doctest::Approx(-1.0));
}

TEST_CASE("stationary states carry the same current on every link") {
  DeviceSpec d = triangle_device(kPi / 2);
  auto eff = build_effective(d, 1);
  auto es = eigensystem(eff.matrix);
  CVector g = es.vectors.col(0);
  double chiral = chiral_current(eff.basis, g, d);
  for (const auto& [a, c] : loop_links(d)) {
    CHECK(bond_current(eff.basis, g, a, c, loop_phase(d, a, c)) == doctest::Approx(chiral / 3.0).epsilon(1e-9));
  }
}

TEST_CASE("loop links follow the device orientation") {
  DeviceSpec d = triangle_device(0.7);
  auto links = loop_links(d);
  REQUIRE(links.size() == 3);
  CHECK(links[2] == std::array<int, 2>{2, 0});
  double total = 0.0;
  for (const auto& [a, c] : links) total += loop_phase(d, a, c);
  CHECK(wrap_phase(total) == doctest::Approx(0.7));
}

TEST_CASE("correlator current matches the bond operator") {
  FockBasis q(3, 2);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    CMatrix rho = projector(random_state(q.dim(), rng));
    int j = trial % 3, k = (trial + 1) % 3;
    double phi = phase(rng);
    worst = std::max(worst, std::abs(current_from_correlators(q, rho, j, k, phi) - bond_current(q, rho, j, k, phi)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("Pauli conventions") {
  FockBasis q(1, 2);
  CHECK(expectation(pauli(q, 0, PauliAxis::Z), q.ket({1})) == doctest::Approx(1.0));
  CVector plus_y = (q.ket({0}) + kI * q.ket({1})) / std::sqrt(2.0);
  // sigma^- = a puts +i on the excited state at <Y> = -1.
  CHECK(expectation(pauli(q, 0, PauliAxis::Y), plus_y) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(pauli(FockBasis(2, 2, 1), 0, PauliAxis::X), UnsupportedOperation);
}

TEST_CASE("three-site chirality") {
  FockBasis q(3, 2);
  CHECK(std::abs(chirality(q, projector(q.ket({1, 0, 0}))).value) < 1e-14);
  CHECK(std::abs(chirality(q, CMatrix(CMatrix::Identity(8, 8) / 8.0)).value) < 1e-14);
  Complex w = std::polar(1.0, kTwoPi / 3);
  CVector k1 = (q.ket({1, 0, 0}) + w * q.ket({0, 1, 0}) + w * w * q.ket({0, 0, 1})) / std::sqrt(3.0);
  CVector k2 = (q.ket({1, 0, 0}) + w * w * q.ket({0, 1, 0}) + w * q.ket({0, 0, 1})) / std::sqrt(3.0);
  double c1 = chirality(q, projector(k1)).value;
  double c2 = chirality(q, projector(k2)).value;
  CHECK(std::abs(c1) == doctest::Approx(2.0 * std::sqrt(3.0)));
  CHECK(c1 == doctest::Approx(-c2));
  CHECK(is_hermitian(chirality_op(q)));
}

TEST_CASE("chirality projection of qutrit states") {
  FockBasis full(3, 3);
  CVector psi = (full.ket({1, 0, 0}) + full.ket({2, 0, 0})) / std::sqrt(2.0);
  CHECK_THROWS_AS(chirality(full, projector(psi)), UnsupportedOperation);
  auto c = chirality(full, projector(psi), true);
  CHECK(c.weight == doctest::Approx(0.5));
}

TEST_CASE("purity and fidelity") {
  FockBasis q(2, 2);
  CVector bell = (q.ket({1, 0}) + q.ket({0, 1})) / std::sqrt(2.0);
  CHECK(purity(reduced_density(q, bell, 0)) == doctest::Approx(0.5));
  CHECK(purity(reduced_density(q, CVector(q.ket({1, 0})), 1)) == doctest::Approx(1.0));
  CHECK(fidelity(bell, projector(bell)) == doctest::Approx(1.0));
  CHECK(fidelity(bell, CVector(q.ket({1, 1}))) == doctest::Approx(0.0));
}

TEST_CASE("energy variance vanishes on eigenstates") {
  auto eff = build_effective(triangle_device(1.0), 1);
  auto es = eigensystem(eff.matrix);
  for (int i = 0; i < 3; ++i) {
    CVector v = es.vectors.col(i);
    CHECK(energy(eff.matrix, v) == doctest::Approx(es.values(i)));
    CHECK(std::abs(energy_variance(eff.matrix, v)) < 1e-14);
  }
}

TEST_CASE("continuity equation") {
  auto eff = build_effective(triangle_device(kPi / 2), 1);
  auto es = eigensystem(eff.matrix);
  auto grid = time_grid(0.0, 300.0, 1.0);
  auto still = evolve_unitary(Generator::effective(eff), CVector(es.vectors.col(2)), grid);
  CHECK(continuity_check(still, eff.hops) < 1e-8);
  auto moving = evolve_unitary(Generator::effective(eff), eff.basis.ket({1, 0, 0}), grid);
  CHECK(continuity_check(moving, eff.hops) < 1e-5);
}
