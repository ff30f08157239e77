#include "chiralsim/dynamics.hpp"
#include "chiralsim/experiments.hpp"
#include "chiralsim/observables.hpp"
#include "chiralsim/spectrum.hpp"

#include <doctest.h>

#include <cmath>

using namespace chiralsim;

namespace {

const double J = units::mhz(2.0);

double population(const Trajectory& tr, std::size_t i, const CVector& ket) {
  return std::norm(ket.dot(tr.states[i]));
}

}  // namespace

TEST_CASE("time grid") {
  auto g = time_grid(0.0, 600.0, 1.0);
  CHECK(g.size() == 601);
  CHECK(g.back() == 600.0);
  CHECK(time_grid(0.0, 1.0, 0.3).size() == 4);
  CHECK_THROWS_AS(time_grid(0.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("zero-flux single photon follows the spectral oracle") {
  auto eff = build_effective(triangle_device(), 1);
  auto grid = time_grid(0.0, 600.0, 5.0);
  CVector psi0 = eff.basis.ket({1, 0, 0});
  auto tr = evolve_unitary(Generator::effective(eff), psi0, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double oracle = 5.0 / 9.0 + 4.0 / 9.0 * std::cos(3 * J * grid[i]);
    worst = std::max(worst, std::abs(population(tr, i, psi0) - oracle));
  }
  CHECK(worst < 1e-6);
  CHECK(tr.norm_drift < 1e-6);
  CHECK(tr.verify_deviation < 1e-5);
}

TEST_CASE("eigenstates are stationary") {
  auto eff = build_effective(triangle_device(kPi / 2), 1);
  auto es = eigensystem(eff.matrix);
  auto grid = time_grid(0.0, 600.0, 10.0);
  auto tr = evolve_unitary(Generator::effective(eff), CVector(es.vectors.col(0)), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK((tr.states[i].cwiseAbs2() - es.vectors.col(0).cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("static two-site Rabi transfer") {
  FockBasis b(2, 2, 1);
  CMatrix h = J * hop(b, 0, 1, 0.0);
  auto grid = time_grid(0.0, 250.0, 0.5);
  auto tr = evolve_unitary(Generator::constant(b, h), b.ket({1, 0}), grid);
  CHECK(population(tr, 250, b.ket({0, 1})) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(grid[250] == doctest::Approx(kPi / (2 * J)));
}

TEST_CASE("lab frame integrates the driven device") {
  DeviceSpec d = two_site_device(5.835, 5.8, 4.0, 35.0, 0.0);
  FockBasis b(2, 2, 1);
  LabHamiltonian lab(d, b);
  auto grid = time_grid(0.0, 125.0, 125.0);
  PropagatorConfig c;
  c.dt_ns = 0.1;
  auto tr = evolve_unitary(Generator::lab(lab), b.ket({1, 0}), grid, c);
  CHECK(population(tr, 1, b.ket({0, 1})) > 0.95);
}

TEST_CASE("step-size guard and validation") {
  auto eff = build_effective(triangle_device(), 1);
  PropagatorConfig c;
  c.dt_ns = 50.0;
  CHECK_THROWS_AS(evolve_unitary(Generator::effective(eff), eff.basis.ket({1, 0, 0}), {0.0, 100.0}, c), ConfigError);
  CHECK_THROWS_AS(evolve_unitary(Generator::effective(eff), CVector::Zero(3), {0.0, 1.0}), ConfigError);
}

TEST_CASE("rotating frame map") {
  FockBasis b(1, 2);
  FrameMap f{{units::ghz(5.0)}};
  CVector psi = (b.ket({0}) + b.ket({1})) / std::sqrt(2.0);
  CHECK(std::abs(f.apply(b, psi, 0.3)(1) - psi(1) * std::polar(1.0, units::ghz(5.0) * 0.3)) < 1e-12);

  // Single static qubit: lab evolution undone by the frame map.
  DeviceSpec one;
  one.sites.push_back({5.0, 0.0, 0.0, {}, {}});
  LabHamiltonian lab(one, b);
  PropagatorConfig c;
  c.dt_ns = 0.1;
  auto grid = time_grid(0.0, 10.0, 1.0);
  auto tr = to_rotating_frame(evolve_unitary(Generator::lab(lab), psi, grid, c), f);
  for (const auto& s : tr.states) CHECK((s - psi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Lindblad amplitude damping") {
  FockBasis b(1, 2);
  NoiseChannel ch;
  ch.t1_us = {10.0};
  ch.tphi_us = {std::nullopt};
  CMatrix rho0 = b.ket({1}) * b.ket({1}).adjoint();
  auto grid = time_grid(0.0, 2000.0, 100.0);
  PropagatorConfig c;
  c.dt_ns = 10.0;
  auto tr = evolve_lindblad(Generator::constant(b, CMatrix::Zero(2, 2)), rho0, ch, grid, c);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(tr.rhos[i](1, 1).real() == doctest::Approx(std::exp(-grid[i] / 1e4)).epsilon(1e-9));
  }
  CHECK(tr.min_eigenvalue > -1e-9);
}

TEST_CASE("Lindblad pure dephasing") {
  FockBasis b(1, 2);
  NoiseChannel ch;
  ch.t1_us = {std::nullopt};
  ch.tphi_us = {5.0};
  CVector plus = (b.ket({0}) + b.ket({1})) / std::sqrt(2.0);
  auto grid = time_grid(0.0, 1000.0, 100.0);
  PropagatorConfig c;
  c.dt_ns = 10.0;
  auto tr = evolve_lindblad(Generator::constant(b, CMatrix::Zero(2, 2)), CMatrix(plus * plus.adjoint()), ch, grid, c);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(tr.rhos[i](0, 1)) == doctest::Approx(0.5 * std::exp(-grid[i] / 5e3)).epsilon(1e-9));
  }
}

TEST_CASE("Lindblad rejects invalid input") {
  FockBasis b(1, 2);
  NoiseChannel ch = NoiseChannel::from_device(triangle_device());
  CMatrix bad = CMatrix::Identity(2, 2);
  CHECK_THROWS_AS(evolve_lindblad(Generator::constant(b, CMatrix::Zero(2, 2)), bad, ch, {0.0, 1.0}), ConfigError);
}

TEST_CASE("noise RNG streams") {
  NoiseRng a(7, 0), b(7, 0), c(7, 1);
  double x = a.uniform();
  CHECK(x == b.uniform());
  CHECK(x != c.uniform());
  NoiseRng d(11, 3);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double v = d.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("telegraph realization") {
  auto spec = ClassicalNoiseSpec::one_over_f(1e-4, 1e-1, 5, units::mhz(0.5), 8, 7);
  CHECK(spec.fluctuators.size() == 16);
  double total = 0.0;
  for (const auto& f : spec.fluctuators) total += f.amplitude * f.amplitude;
  CHECK(std::sqrt(total) == doctest::Approx(units::mhz(0.5)));
  NoiseRng rng(7, 0);
  TelegraphRealization real(spec, 3, 600.0, rng);
  auto breaks = real.breakpoints();
  CHECK(std::is_sorted(breaks.begin(), breaks.end()));
  for (int s = 0; s < 3; ++s) CHECK(std::abs(real.shift(s, 10.0)) <= std::sqrt(16.0) * units::mhz(0.5) + 1e-12);
}

TEST_CASE("zero-amplitude noise ensemble equals unitary evolution") {
  auto eff = build_effective(triangle_device(kPi / 2), FockBasis(3, 2));
  CVector psi0 = eff.basis.ket({1, 0, 0});
  auto grid = time_grid(0.0, 200.0, 10.0);
  ClassicalNoiseSpec quiet;
  quiet.fluctuators = {{0.01, 0.0}};
  quiet.trajectories = 5;
  auto ens = evolve_noisy_ensemble(Generator::effective(eff), psi0, quiet, grid);
  auto uni = evolve_unitary(Generator::effective(eff), psi0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK((ens.rhos[i] - uni.states[i] * uni.states[i].adjoint()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("idle coherence decays under classical noise") {
  FockBasis b(1, 2);
  auto spec = ClassicalNoiseSpec::one_over_f(1e-4, 1e-1, 5, units::mhz(0.5), 64, 7);
  CVector plus = (b.ket({0}) + b.ket({1})) / std::sqrt(2.0);
  auto grid = time_grid(0.0, 600.0, 100.0);
  auto ens = evolve_noisy_ensemble(Generator::constant(b, CMatrix::Zero(2, 2)), plus, spec, grid);
  CHECK(std::abs(ens.rhos.front()(0, 1)) == doctest::Approx(0.5));
  CHECK(std::abs(ens.rhos.back()(0, 1)) < 0.45);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 3) throw NumericalError("boom");
                  }),
                  NumericalError);
}
