// Device description: sites, modulated links, simulation settings.

#pragma once

#include "chiralsim/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace chiralsim {

struct SiteSpec {
  double omega_ghz = 0.0;
  double u2_mhz = 0.0;
  double u3_mhz = 0.0;
  std::optional<double> t1_us;
  std::optional<double> tphi_us;

  bool operator==(const SiteSpec&) const = default;
};

/// Coupler between sites j and k (0-based), g(t) = g_dc + g0 cos(delta t + phi).
struct LinkSpec {
  int j = 0;
  int k = 1;
  double g0_mhz = 0.0;
  double delta_mhz = 0.0;
  double phi_rad = 0.0;
  double gdc_mhz = 0.0;

  /// Same physical link seen from k to j.
  LinkSpec reversed() const { return {k, j, g0_mhz, -delta_mhz, -phi_rad, gdc_mhz}; }
  bool operator==(const LinkSpec&) const = default;
};

struct SimulationSpec {
  int levels = 2;
  std::optional<double> dt_ns;

  bool operator==(const SimulationSpec&) const = default;
};

struct DeviceSpec {
  std::vector<SiteSpec> sites;
  std::vector<LinkSpec> links;
  SimulationSpec simulation;
  /// Non-fatal findings from loading (frequency mismatch and the like).
  std::vector<std::string> warnings;

  int num_sites() const { return static_cast<int>(sites.size()); }
  std::vector<double> link_phases() const;

  /// Copy with every link's phase replaced.
  DeviceSpec with_phases(const std::vector<double>& phases) const;
  /// Copy with every link's modulation amplitude replaced (MHz).
  DeviceSpec with_g0(double g0_mhz) const;

  bool operator==(const DeviceSpec& other) const {
    return sites == other.sites && links == other.links && simulation == other.simulation;
  }
};

/// Validation problems (empty when valid).
std::vector<std::string> validate(const DeviceSpec& device);

/// Modulation-frequency mismatch per link in MHz: ||delta| - |omega_j - omega_k||.
std::vector<double> frequency_residuals_mhz(const DeviceSpec& device);

DeviceSpec parse_config(const std::string& text);
DeviceSpec load_config(const std::filesystem::path& path);
std::string serialize_config(const DeviceSpec& device);

/// The three-qubit triangle used for the circulation and ground-state current
/// experiments. phi31 sets the loop flux.
DeviceSpec triangle_device(double phi31 = 0.0);

/// Two-site device for the chevron experiments.
DeviceSpec two_site_device(double omega1_ghz, double omega2_ghz, double g0_mhz,
                           double delta_mhz, double gdc_mhz);

struct RwaLintEntry {
  int j = 0;
  int k = 0;
  bool resonant = false;
  std::optional<double> ratio;  // g0 / |delta| when delta != 0
  std::vector<std::string> flags;
};

struct RwaLintOptions {
  double invalid_ratio = 0.25;
  bool check_coupler_range = false;
  double coupler_min_mhz = -55.0;
  double coupler_max_mhz = 5.0;
};

std::vector<RwaLintEntry> rwa_lint(const DeviceSpec& device, const RwaLintOptions& options = {});

}  // namespace chiralsim
