#include "chiralsim/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

namespace chiralsim {

std::vector<double> DeviceSpec::link_phases() const {
  std::vector<double> out;
  out.reserve(links.size());
  for (const auto& link : links) out.push_back(link.phi_rad);
  return out;
}

DeviceSpec DeviceSpec::with_phases(const std::vector<double>& phases) const {
  if (phases.size() != links.size()) throw ConfigError("phase count does not match link count");
  DeviceSpec out = *this;
  for (std::size_t i = 0; i < phases.size(); ++i) out.links[i].phi_rad = phases[i];
  return out;
}

DeviceSpec DeviceSpec::with_g0(double g0_mhz) const {
  DeviceSpec out = *this;
  for (auto& link : out.links) link.g0_mhz = g0_mhz;
  return out;
}

std::vector<double> frequency_residuals_mhz(const DeviceSpec& device) {
  std::vector<double> out;
  for (const auto& link : device.links) {
    double split = (device.sites[static_cast<std::size_t>(link.j)].omega_ghz -
                    device.sites[static_cast<std::size_t>(link.k)].omega_ghz) * 1e3;
    out.push_back(std::abs(std::abs(link.delta_mhz) - std::abs(split)));
  }
  return out;
}

std::vector<std::string> validate(const DeviceSpec& device) {
  std::vector<std::string> problems;
  if (device.sites.empty()) problems.emplace_back("sites: at least one site required");
  for (std::size_t i = 0; i < device.sites.size(); ++i) {
    const auto& s = device.sites[i];
    std::string tag = "sites." + std::to_string(i + 1);
    if (!(s.omega_ghz > 0.0)) problems.push_back(tag + ".omega_ghz must be > 0");
    if (s.u2_mhz < 0.0) problems.push_back(tag + ".u2_mhz must be >= 0");
    if (s.u3_mhz < 0.0) problems.push_back(tag + ".u3_mhz must be >= 0");
    if (s.t1_us && !(*s.t1_us > 0.0)) problems.push_back(tag + ".t1_us must be > 0");
    if (s.tphi_us && !(*s.tphi_us > 0.0)) problems.push_back(tag + ".tphi_us must be > 0");
  }
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < device.links.size(); ++i) {
    const auto& l = device.links[i];
    std::string tag = "links." + std::to_string(i + 1);
    if (l.j < 0 || l.j >= device.num_sites() || l.k < 0 || l.k >= device.num_sites()) {
      problems.push_back(tag + ".pair references a missing site");
      continue;
    }
    if (l.j == l.k) {
      problems.push_back(tag + ".pair must join two distinct sites");
      continue;
    }
    auto key = std::minmax(l.j, l.k);
    if (!seen.insert(key).second) {
      problems.push_back(tag + ".pair duplicates link (" + std::to_string(key.first + 1) + "," +
                         std::to_string(key.second + 1) + ")");
    }
  }
  if (device.simulation.levels < 2) problems.emplace_back("simulation.levels must be >= 2");
  if (device.simulation.dt_ns && !(*device.simulation.dt_ns > 0.0)) {
    problems.emplace_back("simulation.dt_ns must be > 0");
  }
  return problems;
}

namespace {

using Value = std::variant<double, std::vector<double>>;

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string item;
  while (std::getline(ss, item, '.')) parts.push_back(trim(item));
  return parts;
}

bool parse_number(const std::string& text, double& out) {
  std::string t = trim(text);
  if (t.empty()) return false;
  if (t == "inf" || t == "+inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  std::size_t used = 0;
  try {
    out = std::stod(t, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == t.size();
}

// Flat key/value reader for the TOML subset used by device files:
// [table.headers], key = number, key = [n, n], '#' comments.
std::map<std::string, Value> read_flat(const std::string& text, std::vector<std::string>& problems) {
  std::map<std::string, Value> out;
  std::string prefix;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(where + ": unterminated table header");
        continue;
      }
      prefix = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + ": expected key = value");
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::string path = prefix.empty() ? key : prefix + "." + key;
    if (out.count(path)) {
      problems.push_back(where + ": duplicate key " + path);
      continue;
    }
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') {
        problems.push_back(where + ": unterminated array for " + path);
        continue;
      }
      std::vector<double> items;
      std::stringstream ss(value.substr(1, value.size() - 2));
      std::string item;
      bool ok = true;
      while (std::getline(ss, item, ',')) {
        double v = 0.0;
        if (!parse_number(item, v)) ok = false;
        items.push_back(v);
      }
      if (!ok) {
        problems.push_back(where + ": non-numeric array entry for " + path);
        continue;
      }
      out.emplace(path, items);
    } else {
      double v = 0.0;
      if (!parse_number(value, v)) {
        problems.push_back(where + ": non-numeric value for " + path);
        continue;
      }
      out.emplace(path, v);
    }
  }
  return out;
}

bool parse_index(const std::string& text, int& out) {
  double v = 0.0;
  if (!parse_number(text, v) || v < 1.0 || v != std::floor(v)) return false;
  out = static_cast<int>(v);
  return true;
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

DeviceSpec parse_config(const std::string& text) {
  std::vector<std::string> problems;
  auto flat = read_flat(text, problems);

  std::map<int, SiteSpec> sites;
  std::map<int, std::set<std::string>> site_keys;
  struct RawLink {
    std::optional<std::vector<double>> pair;
    LinkSpec spec;
  };
  std::map<int, RawLink> links;
  DeviceSpec device;

  for (const auto& [path, value] : flat) {
    auto parts = split_path(path);
    const double* scalar = std::get_if<double>(&value);
    auto need_scalar = [&]() {
      if (!scalar) problems.push_back(path + ": expected a number");
      return scalar != nullptr;
    };
    if (parts.size() == 3 && parts[0] == "sites") {
      int idx = 0;
      if (!parse_index(parts[1], idx)) {
        problems.push_back(path + ": site index must be a positive integer");
        continue;
      }
      auto& site = sites[idx];
      site_keys[idx].insert(parts[2]);
      const auto& field = parts[2];
      if (field == "omega_ghz") {
        if (need_scalar()) site.omega_ghz = *scalar;
      } else if (field == "u2_mhz") {
        if (need_scalar()) site.u2_mhz = *scalar;
      } else if (field == "u3_mhz") {
        if (need_scalar()) site.u3_mhz = *scalar;
      } else if (field == "t1_us") {
        if (need_scalar()) site.t1_us = *scalar;
      } else if (field == "tphi_us") {
        if (need_scalar()) site.tphi_us = *scalar;
      } else {
        problems.push_back(path + ": unknown key");
      }
    } else if (parts.size() == 3 && parts[0] == "links") {
      int idx = 0;
      if (!parse_index(parts[1], idx)) {
        problems.push_back(path + ": link index must be a positive integer");
        continue;
      }
      auto& link = links[idx];
      const auto& field = parts[2];
      if (field == "pair") {
        const auto* arr = std::get_if<std::vector<double>>(&value);
        if (!arr || arr->size() != 2) {
          problems.push_back(path + ": expected [j, k]");
        } else {
          link.pair = *arr;
        }
      } else if (field == "g0_mhz") {
        if (need_scalar()) link.spec.g0_mhz = *scalar;
      } else if (field == "delta_mhz") {
        if (need_scalar()) link.spec.delta_mhz = *scalar;
      } else if (field == "phi_rad") {
        if (need_scalar()) link.spec.phi_rad = *scalar;
      } else if (field == "gdc_mhz") {
        if (need_scalar()) link.spec.gdc_mhz = *scalar;
      } else {
        problems.push_back(path + ": unknown key");
      }
    } else if (parts.size() == 2 && parts[0] == "simulation") {
      if (parts[1] == "levels") {
        if (need_scalar()) {
          if (*scalar != std::floor(*scalar)) {
            problems.push_back(path + ": must be an integer");
          } else {
            device.simulation.levels = static_cast<int>(*scalar);
          }
        }
      } else if (parts[1] == "dt_ns") {
        if (need_scalar()) device.simulation.dt_ns = *scalar;
      } else {
        problems.push_back(path + ": unknown key");
      }
    } else {
      problems.push_back(path + ": unknown key");
    }
  }

  int expected = 1;
  for (auto& [idx, site] : sites) {
    if (idx != expected) {
      problems.push_back("sites: indices must run 1.." + std::to_string(sites.size()) +
                         " without gaps");
      break;
    }
    if (!site_keys[idx].count("omega_ghz")) {
      problems.push_back("sites." + std::to_string(idx) + ".omega_ghz is required");
    }
    device.sites.push_back(site);
    ++expected;
  }
  for (auto& [idx, raw] : links) {
    if (!raw.pair) {
      problems.push_back("links." + std::to_string(idx) + ".pair is required");
      continue;
    }
    const auto& p = *raw.pair;
    int j = 0, k = 0;
    if (!parse_index(std::to_string(p[0]), j) || !parse_index(std::to_string(p[1]), k) ||
        p[0] != std::floor(p[0]) || p[1] != std::floor(p[1])) {
      problems.push_back("links." + std::to_string(idx) + ".pair entries must be site numbers");
      continue;
    }
    raw.spec.j = j - 1;
    raw.spec.k = k - 1;
    device.links.push_back(raw.spec);
  }

  auto more = validate(device);
  problems.insert(problems.end(), more.begin(), more.end());
  if (!problems.empty()) throw ConfigError(problems);

  auto residuals = frequency_residuals_mhz(device);
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const auto& l = device.links[i];
    if (residuals[i] > 1e-3 && (l.g0_mhz != 0.0)) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "links.%zu (%d,%d): modulation frequency misses the qubit splitting by %.6g MHz",
                    i + 1, l.j + 1, l.k + 1, residuals[i]);
      device.warnings.emplace_back(buf);
    }
  }
  return device;
}

DeviceSpec load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const DeviceSpec& device) {
  std::ostringstream out;
  out << "[simulation]\n";
  out << "levels = " << device.simulation.levels << "\n";
  if (device.simulation.dt_ns) out << "dt_ns = " << fmt_double(*device.simulation.dt_ns) << "\n";
  for (std::size_t i = 0; i < device.sites.size(); ++i) {
    const auto& s = device.sites[i];
    out << "\n[sites." << i + 1 << "]\n";
    out << "omega_ghz = " << fmt_double(s.omega_ghz) << "\n";
    out << "u2_mhz = " << fmt_double(s.u2_mhz) << "\n";
    out << "u3_mhz = " << fmt_double(s.u3_mhz) << "\n";
    if (s.t1_us) out << "t1_us = " << fmt_double(*s.t1_us) << "\n";
    if (s.tphi_us) out << "tphi_us = " << fmt_double(*s.tphi_us) << "\n";
  }
  for (std::size_t i = 0; i < device.links.size(); ++i) {
    const auto& l = device.links[i];
    out << "\n[links." << i + 1 << "]\n";
    out << "pair = [" << l.j + 1 << ", " << l.k + 1 << "]\n";
    out << "g0_mhz = " << fmt_double(l.g0_mhz) << "\n";
    out << "delta_mhz = " << fmt_double(l.delta_mhz) << "\n";
    out << "phi_rad = " << fmt_double(l.phi_rad) << "\n";
    out << "gdc_mhz = " << fmt_double(l.gdc_mhz) << "\n";
  }
  return out.str();
}

DeviceSpec triangle_device(double phi31) {
  DeviceSpec device;
  for (double omega : {5.8, 5.8, 5.835}) {
    SiteSpec s;
    s.omega_ghz = omega;
    s.u2_mhz = 200.0;
    s.u3_mhz = 200.0;
    s.t1_us = 10.0;
    device.sites.push_back(s);
  }
  device.links = {
      LinkSpec{0, 1, 4.0, 0.0, 0.0, 0.0},
      LinkSpec{1, 2, 4.0, 35.0, 0.0, 0.0},
      LinkSpec{2, 0, 4.0, 35.0, phi31, 0.0},
  };
  device.simulation.levels = 3;
  return device;
}

DeviceSpec two_site_device(double omega1_ghz, double omega2_ghz, double g0_mhz, double delta_mhz,
                           double gdc_mhz) {
  DeviceSpec device;
  for (double omega : {omega1_ghz, omega2_ghz}) {
    SiteSpec s;
    s.omega_ghz = omega;
    s.u2_mhz = 200.0;
    s.u3_mhz = 200.0;
    device.sites.push_back(s);
  }
  device.links = {LinkSpec{0, 1, g0_mhz, delta_mhz, 0.0, gdc_mhz}};
  device.simulation.levels = 2;
  return device;
}

std::vector<RwaLintEntry> rwa_lint(const DeviceSpec& device, const RwaLintOptions& options) {
  std::vector<RwaLintEntry> out;
  for (const auto& l : device.links) {
    RwaLintEntry e;
    e.j = l.j;
    e.k = l.k;
    if (l.delta_mhz == 0.0) {
      e.resonant = true;
      e.flags.emplace_back("resonant (exact)");
      if (std::abs(std::sin(l.phi_rad)) > 1e-12 && l.g0_mhz != 0.0) {
        e.flags.emplace_back("phase on a resonant link is not realizable by a real coupler");
      }
    } else {
      e.ratio = std::abs(l.g0_mhz) / std::abs(l.delta_mhz);
      if (*e.ratio >= options.invalid_ratio) e.flags.emplace_back("RWA invalid");
    }
    if (options.check_coupler_range) {
      double hi = l.gdc_mhz + std::abs(l.g0_mhz);
      double lo = l.gdc_mhz - std::abs(l.g0_mhz);
      if (lo < options.coupler_min_mhz || hi > options.coupler_max_mhz) {
        e.flags.emplace_back("coupling excursion outside the achievable coupler range");
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace chiralsim
