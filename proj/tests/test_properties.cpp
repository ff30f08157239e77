#include "chiralsim/dynamics.hpp"
#include "chiralsim/gauge.hpp"
#include "chiralsim/hamiltonian.hpp"
#include "chiralsim/observables.hpp"
#include "chiralsim/spectrum.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace chiralsim;

namespace {

DeviceSpec random_phases(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  DeviceSpec d = triangle_device();
  return d.with_phases({phase(rng), phase(rng), phase(rng)});
}

}  // namespace

TEST_CASE("effective Hamiltonians are Hermitian and number conserving") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    DeviceSpec d = random_phases(rng);
    auto eff = build_effective(d, FockBasis(3, 3));
    CHECK(is_hermitian(eff.matrix));
    CMatrix n = total_number(eff.basis);
    CHECK((eff.matrix * n - n * eff.matrix).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lab Hamiltonian is Hermitian and number conserving at all times") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> when(0.0, 1000.0);
  FockBasis b(3, 3);
  LabHamiltonian lab(triangle_device(0.4), b);
  CMatrix n = total_number(b);
  for (int trial = 0; trial < 50; ++trial) {
    double t = when(rng);
    CMatrix h = lab(t);
    CHECK(is_hermitian(h, 1e-10));
    CHECK((h * n - n * h).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(is_hermitian(lab.interaction(t), 1e-10));
  }
}

TEST_CASE("spectrum depends only on the loop flux") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    DeviceSpec d = random_phases(rng);
    DeviceSpec same = with_loop_flux(triangle_device(), device_flux(d));
    for (int m : {1, 2}) {
      auto a = eigensystem(build_effective(d, m).matrix).values;
      auto b = eigensystem(build_effective(same, m).matrix).values;
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("unitary evolution preserves norm and manifold") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss;
  auto eff = build_effective(triangle_device(1.1), FockBasis(3, 2));
  CMatrix n = total_number(eff.basis);
  for (int trial = 0; trial < 10; ++trial) {
    CVector psi = CVector::Zero(eff.basis.dim());
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      if (eff.basis.total(i) == 1) psi(i) = Complex(gauss(rng), gauss(rng));
    }
    psi.normalize();
    auto tr = evolve_unitary(Generator::effective(eff), psi, time_grid(0.0, 200.0, 20.0));
    for (const auto& s : tr.states) {
      CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(expectation(n, s) == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("chiral current is odd in the flux") {
  for (double phi : {0.3, 1.0, 2.0, 2.9}) {
    auto gp = eigensystem(build_effective(triangle_device(phi), 1).matrix);
    auto gm = eigensystem(build_effective(triangle_device(-phi), 1).matrix);
    double ip = chiral_current(FockBasis(3, 2, 1), CVector(gp.vectors.col(0)), triangle_device(phi));
    double im = chiral_current(FockBasis(3, 2, 1), CVector(gm.vectors.col(0)), triangle_device(-phi));
    CHECK(ip == doctest::Approx(-im).epsilon(1e-9));
  }
}

TEST_CASE("reduced density matrices are states") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  FockBasis b(3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    CVector psi(b.dim());
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = Complex(gauss(rng), gauss(rng));
    psi.normalize();
    for (int s = 0; s < 3; ++s) {
      CMatrix r = reduced_density(b, psi, s);
      CHECK(is_hermitian(r));
      CHECK(r.trace().real() == doctest::Approx(1.0));
      Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
      CHECK(es.eigenvalues().minCoeff() > -1e-12);
      double p = purity(r);
      CHECK(p <= 1.0 + 1e-12);
      CHECK(p >= 1.0 / 3.0 - 1e-12);
    }
  }
}
