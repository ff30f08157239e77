#include "chiralsim/experiments.hpp"
#include "chiralsim/hamiltonian.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace chiralsim;

TEST_CASE("frame names") {
  CHECK(parse_frame("lab") == Frame::Lab);
  CHECK(to_string(parse_frame("effective")) == "effective");
  CHECK_THROWS_AS(parse_frame("rotating-ish"), ConfigError);
  CHECK(config_hash(triangle_device()) == config_hash(triangle_device()));
  CHECK(config_hash(triangle_device()) != config_hash(triangle_device(0.1)));
}

TEST_CASE("circulation reverses with the flux") {
  CirculationOptions o;
  o.flux = kPi / 2;
  o.duration_ns = 300.0;
  o.detect_period = false;
  auto plus = run_circulation(triangle_device(), o);
  o.flux = -kPi / 2;
  auto minus = run_circulation(triangle_device(), o);
  CHECK(plus.label("peak_order") == "1>3>2");
  CHECK(minus.label("peak_order") == "1>2>3");
  CHECK(plus.metric("orientation") == -minus.metric("orientation"));
  CHECK(plus.table.has("i_chiral"));
  CHECK(plus.table.rows.size() == 301);
}

TEST_CASE("protocols that need a triangle reject other devices") {
  DarkonOptions d;
  d.alphas = {0.0};
  CHECK_THROWS_AS(run_darkon(two_site_device(5.835, 5.8, 4.0, 35.0, 0.0), d), ConfigError);
}

TEST_CASE("far-detuned chevron barely transfers") {
  ChevronOptions o;
  o.detunings_mhz = {60.0};
  o.duration_ns = 200.0;
  auto r = run_chevron(o);
  auto p = r.table.column("p_q1");
  CHECK(*std::min_element(p.begin(), p.end()) > 0.97);
}

TEST_CASE("time-reversal metric is even in the flux") {
  auto a = trs_metric(triangle_device(), kPi / 3);
  auto b = trs_metric(triangle_device(), -kPi / 3);
  CHECK(a.period_ns == doctest::Approx(b.period_ns).epsilon(1e-6));
  CHECK(a.metric == doctest::Approx(b.metric).epsilon(1e-4));
  CHECK(a.metric > 0.1);
}

TEST_CASE("fit warns on flat observations") {
  Table flat;
  flat.columns = {"t_ns", "p_q1", "p_q2", "p_q3"};
  for (int i = 0; i <= 100; ++i) flat.add({double(i), 1.0, 0.0, 0.0});
  auto fit = fit_g0(flat, triangle_device(kPi / 2));
  CHECK_FALSE(fit.warnings.empty());
}

TEST_CASE("fit recovers g0 from noisy data") {
  CirculationOptions o;
  o.flux = kPi / 2;
  o.detect_period = false;
  auto observed = run_circulation(triangle_device().with_g0(4.1), o).table;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 0.02);
  for (auto& row : observed.rows) {
    for (std::size_t c = 1; c < row.size(); ++c) row[c] += noise(rng);
  }
  auto fit = fit_g0(observed, triangle_device(kPi / 2));
  CHECK(fit.g0_mhz == doctest::Approx(4.1).epsilon(0.03));
  auto r = fit_result(fit, triangle_device(kPi / 2));
  CHECK(r.metric("g0_mhz") == fit.g0_mhz);
}

TEST_CASE("adiabatic fidelity improves with ramp time") {
  double previous = 0.0;
  for (double T : {100.0, 200.0, 400.0, 800.0}) {
    RampSchedule s;
    s.duration_ns = T;
    auto out = ramp_to_ground(triangle_device(), kPi / 2, 1, s);
    CHECK(out.fidelity > previous);
    previous = out.fidelity;
  }
  CHECK(previous > 0.95);
}

TEST_CASE("ramp schedule progress") {
  RampSchedule s;
  s.duration_ns = 100.0;
  CHECK(s.progress(0.0) == 0.0);
  CHECK(s.progress(100.0) == doctest::Approx(1.0));
  CHECK(s.progress(50.0) == doctest::Approx(0.5));
  s.shape = RampShape::Cosine;
  CHECK(s.progress(50.0) == doctest::Approx(0.5));
  CHECK(s.progress(10.0) < 0.1);
}

TEST_CASE("darkon at zero mixing is plain circulation") {
  DarkonOptions d;
  d.alphas = {0.0};
  d.duration_ns = 200.0;
  auto dark = run_darkon(triangle_device(), d);
  CirculationOptions o;
  o.flux = kPi / 2;
  o.duration_ns = 200.0;
  o.detect_period = false;
  auto plain = run_circulation(triangle_device(), o);
  auto a = dark.table.column("p_q2");
  auto b = plain.table.column("p_q2");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-5));
}

TEST_CASE("spectrum experiment schema") {
  auto r = run_spectrum(triangle_device(), {-kPi, 0.0, kPi}, {1});
  CHECK(r.table.columns == std::vector<std::string>{"flux_rad", "manifold", "band_index", "energy_mhz", "gap_mhz"});
  CHECK(r.table.rows.size() == 9);
  CHECK(r.metric("gap_near_zero_mhz_m1") < 1e-6);
  CHECK(r.metric("max_gap_mhz_m1") == doctest::Approx(6.0));
}

TEST_CASE("flux compilation experiment") {
  auto r = run_compile_flux(triangle_device(), {1.0});
  CHECK(r.metric("max_flux_error") < 1e-12);
  CHECK_THROWS_AS(run_compile_flux(triangle_device(), {1.0, 2.0}), ConfigError);
}

TEST_CASE("eigenstate preparation hits the momentum states") {
  EigenPrepOptions o;
  o.manifolds = {1};
  auto r = run_eigenstate_prep(triangle_device(), o);
  CHECK(r.table.rows.size() == 3);
  CHECK(r.metric("max_variance_mhz2") < 1e-8);
}
