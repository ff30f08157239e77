#include "chiralsim/device.hpp"
#include "chiralsim/hamiltonian.hpp"

#include <doctest.h>

#include <filesystem>
#include <string>

using namespace chiralsim;

namespace {

std::string triangle_text() {
  return R"(# triangle
[simulation]
levels = 3

[sites.1]
omega_ghz = 5.8
u2_mhz = 200
u3_mhz = 200
t1_us = 10

[sites.2]
omega_ghz = 5.8
u2_mhz = 200
u3_mhz = 200
t1_us = 10

[sites.3]
omega_ghz = 5.835
u2_mhz = 200
u3_mhz = 200
t1_us = 10

[links.1]
pair = [1, 2]
g0_mhz = 4
delta_mhz = 0

[links.2]
pair = [2, 3]
g0_mhz = 4
delta_mhz = 35

[links.3]
pair = [3, 1]
g0_mhz = 4
delta_mhz = 35
phi_rad = 0
)";
}

}  // namespace

TEST_CASE("preset text loads to triangle_device") {
  CHECK(parse_config(triangle_text()) == triangle_device());
  auto shipped = std::filesystem::path(CHIRALSIM_SOURCE_DIR) / "configs" / "triangle.toml";
  DeviceSpec loaded = load_config(shipped);
  CHECK(loaded.links[2].phi_rad == doctest::Approx(kPi / 2).epsilon(1e-7));
  CHECK(loaded.warnings.empty());
}

TEST_CASE("serialize round trip") {
  DeviceSpec d = triangle_device(0.731);
  CHECK(parse_config(serialize_config(d)) == d);
}

TEST_CASE("triangle device parameters") {
  DeviceSpec d = triangle_device();
  CHECK(d.num_sites() == 3);
  CHECK(device_flux(d) == doctest::Approx(0.0));
  CHECK(device_flux(triangle_device(1.0)) == doctest::Approx(1.0));
  CHECK((d.sites[2].omega_ghz - d.sites[1].omega_ghz) * 1e3 == doctest::Approx(d.links[1].delta_mhz));
  CHECK(d.sites[0].u2_mhz == 200.0);
}

TEST_CASE("duplicate links are rejected") {
  std::string text = triangle_text() + "\n[links.4]\npair = [2, 1]\ng0_mhz = 4\ndelta_mhz = 0\n";
  CHECK_THROWS_AS(parse_config(text), ConfigError);
}

TEST_CASE("malformed files are rejected with every problem listed") {
  std::string text = "[sites.1]\nomega_ghz = -1\nbogus = 3\n[links.1]\npair = [1, 5]\n";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.problems().size() >= 2);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/device.toml"), ConfigError);
}

TEST_CASE("modulation mismatch loads with a warning") {
  std::string text = triangle_text();
  auto pos = text.find("delta_mhz = 35");
  text.replace(pos, 14, "delta_mhz = 30");
  DeviceSpec d = parse_config(text);
  REQUIRE(d.warnings.size() == 1);
  CHECK(frequency_residuals_mhz(d)[1] == doctest::Approx(5.0));
}

TEST_CASE("RWA lint") {
  auto report = rwa_lint(triangle_device());
  REQUIRE(report.size() == 3);
  CHECK(report[0].resonant);
  CHECK_FALSE(report[0].ratio.has_value());
  REQUIRE(report[1].ratio.has_value());
  CHECK(*report[1].ratio == doctest::Approx(4.0 / 35.0));
  CHECK(report[1].flags.empty());

  auto strong = rwa_lint(two_site_device(5.835, 5.8, 35.0, 35.0, 0.0));
  bool invalid = false;
  for (const auto& f : strong[0].flags) invalid = invalid || f == "RWA invalid";
  CHECK(*strong[0].ratio == doctest::Approx(1.0));
  CHECK(invalid);
}

TEST_CASE("device copies") {
  DeviceSpec d = triangle_device(0.5).with_g0(4.1);
  for (const auto& l : d.links) CHECK(l.g0_mhz == 4.1);
  CHECK_THROWS_AS(d.with_phases({0.0}), ConfigError);
  CHECK(device_flux(with_loop_flux(d, -2.0)) == doctest::Approx(-2.0));
}
