#include "chiralsim/device.hpp"
#include "chiralsim/gauge.hpp"

#include <doctest.h>

#include <random>

using namespace chiralsim;

namespace {

LinkGraph triangle() { return LinkGraph::from_device(triangle_device()); }

// 2 x 2 plaquettes on a 3 x 3 grid of sites, row-major numbering.
LinkGraph square_lattice() {
  LinkGraph g;
  g.num_sites = 9;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      int s = 3 * r + c;
      if (c < 2) g.links.emplace_back(s, s + 1);
      if (r < 2) g.links.emplace_back(s, s + 3);
    }
  }
  return g;
}

}  // namespace

TEST_CASE("loop flux") {
  auto g = triangle();
  Cycle loop = {0, 1, 2};
  CHECK(loop_flux(g, {0.0, 0.0, kPi / 2}, loop) == doctest::Approx(kPi / 2));
  CHECK(loop_flux(g, {kPi / 3, kPi / 3, kPi / 3}, loop) == doctest::Approx(kPi));
  CHECK(loop_flux(g, {0.0, 0.0, kPi / 2}, {0, 2, 1}) == doctest::Approx(-kPi / 2));
  CHECK(loop_flux(g, {0.0, 0.0, 3.0 * kPi / 2}, loop) == doctest::Approx(-kPi / 2));
}

TEST_CASE("gauge transforms") {
  auto g = triangle();
  std::vector<double> phases = {0.0, 0.0, kPi / 2};
  CHECK(apply_gauge(g, phases, {0.0, 0.0, 0.0}) == phases);
  auto moved = apply_gauge(g, phases, {kPi / 6, 0.0, 0.0});
  CHECK(moved[0] == doctest::Approx(kPi / 6));
  CHECK(moved[1] == doctest::Approx(0.0));
  CHECK(moved[2] == doctest::Approx(kPi / 3));
  CHECK(loop_flux(g, moved, {0, 1, 2}) == doctest::Approx(kPi / 2));

  LinkGraph chain;
  chain.num_sites = 2;
  chain.links = {{0, 1}};
  auto zeroed = apply_gauge(chain, {1.234}, {0.0, 1.234});
  CHECK(zeroed[0] == doctest::Approx(0.0));
}

TEST_CASE("compile fluxes on the triangle") {
  auto g = triangle();
  auto cycles = fundamental_cycles(g);
  REQUIRE(cycles.size() == 1);
  auto phases = compile_fluxes(g, {kPi / 2});
  int nonzero = 0;
  for (double p : phases) nonzero += std::abs(p) > 1e-12;
  CHECK(nonzero == 1);
  CHECK(loop_flux(g, phases, cycles[0]) == doctest::Approx(kPi / 2));
  CHECK_THROWS_AS(compile_fluxes(g, std::vector<double>{}), ConfigError);
}

TEST_CASE("compile fluxes on a square lattice") {
  auto g = square_lattice();
  std::vector<Cycle> plaquettes = {{0, 1, 4, 3}, {1, 2, 5, 4}, {3, 4, 7, 6}, {4, 5, 8, 7}};
  std::vector<double> targets(4, kPi / 3);
  auto phases = compile_fluxes(g, plaquettes, targets);
  for (const auto& p : plaquettes) CHECK(loop_flux(g, phases, p) == doctest::Approx(kPi / 3));
  auto fundamental = fundamental_cycles(g);
  CHECK(fundamental.size() == 4);
  auto basis_phases = compile_fluxes(g, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(loop_flux(g, basis_phases, fundamental[c]) == doctest::Approx(0.1 * (c + 1)));
  }
}

TEST_CASE("trees carry no flux") {
  LinkGraph tree;
  tree.num_sites = 4;
  tree.links = {{0, 1}, {1, 2}, {1, 3}};
  CHECK(fundamental_cycles(tree).empty());
  auto phases = compile_fluxes(tree, std::vector<double>{});
  for (double p : phases) CHECK(p == 0.0);
}

TEST_CASE("uniform ring gauge") {
  auto g = triangle();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> phases = {u(rng), u(rng), u(rng)};
    double flux = loop_flux(g, phases, {0, 1, 2});
    auto alpha = uniform_ring_gauge(g, phases);
    auto uniform = apply_gauge(g, phases, alpha);
    for (int a = 0; a < 3; ++a) {
      auto [link, sign] = g.find(a, (a + 1) % 3);
      CHECK(wrap_phase(sign * uniform[static_cast<std::size_t>(link)] - flux / 3) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}
