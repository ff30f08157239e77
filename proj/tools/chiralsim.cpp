#include "chiralsim/device.hpp"
#include "chiralsim/experiments.hpp"
#include "chiralsim/gauge.hpp"
#include "chiralsim/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace chiralsim;

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  std::string format = "csv";
  std::uint64_t seed = 7;
  std::string frame = "effective";
  bool plot = false;
  std::optional<double> flux;
  std::optional<double> flux_frac;
  std::string flux_grid = "-3.14159265:3.14159265:41";
  double duration = 0.0;
  double sample = 1.0;
};

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      parts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("grid '" + text + "': '" + item + "' is not a number");
    }
  }
  if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2])) {
    throw ConfigError("grid '" + text + "' must be start:stop:count");
  }
  auto count = static_cast<int>(parts[2]);
  if (count == 1) return {parts[0]};
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(parts[0] + (parts[1] - parts[0]) * i / (count - 1));
  return out;
}

DeviceSpec device_of(const Globals& g) {
  DeviceSpec device = g.config.empty() ? triangle_device(kPi / 2.0) : load_config(g.config);
  auto problems = validate(device);
  if (!problems.empty()) {
    std::string msg = "invalid device:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  for (const auto& w : device.warnings) std::cerr << "warning: " << w << "\n";
  return device;
}

double flux_of(const Globals& g, const DeviceSpec& device) {
  if (g.flux) return *g.flux;
  if (g.flux_frac) return kTwoPi * *g.flux_frac;
  auto cycles = fundamental_cycles(LinkGraph::from_device(device));
  return cycles.empty() ? 0.0 : device_flux(device);
}

void persist(const Globals& g, ExperimentResult result, ChartKind kind = ChartKind::Lines, const std::string& x = "",
             const std::string& y = "", const std::string& value = "") {
  result.manifest.seed = result.manifest.seed ? result.manifest.seed : g.seed;
  fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  DirectoryLock lock(dir);
  auto path = write_result(result, dir, g.format == "json" ? OutputFormat::Json : OutputFormat::Csv);
  std::cout << path.string() << "\n";
  if (g.plot) std::cout << emit_svg(result, kind, dir, x, y, value).string() << "\n";
  for (const auto& [k, v] : result.labels) std::cout << k << " = " << v << "\n";
  for (const auto& [k, v] : result.metrics) std::cout << k << " = " << format_number(v) << "\n";
  for (const auto& n : result.notes) std::cout << "note: " << n << "\n";
}

int validate_config(const Globals& g) {
  DeviceSpec device = device_of(g);
  std::cout << "sites " << device.num_sites() << ", links " << device.links.size() << ", levels "
            << device.simulation.levels << "\n";
  auto residuals = frequency_residuals_mhz(device);
  for (const auto& e : rwa_lint(device)) {
    std::cout << "link " << e.j + 1 << "-" << e.k + 1 << ": " << (e.resonant ? "resonant" : "modulated");
    if (e.ratio) std::cout << ", g0/|delta| = " << format_number(*e.ratio);
    for (const auto& f : e.flags) std::cout << ", " << f;
    std::cout << "\n";
  }
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    if (residuals[i] > 1e-6) {
      std::cout << "link " << i + 1 << ": modulation off resonance by " << format_number(residuals[i]) << " MHz\n";
    }
  }
  if (fundamental_cycles(LinkGraph::from_device(device)).size() > 0) {
    std::cout << "loop flux " << format_number(device_flux(device)) << " rad\n";
  }
  std::cout << "ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic-flux photon lattice simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(CHIRALSIM_VERSION));

  Globals g;
  app.add_option("--config", g.config, "Device configuration file");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--frame", g.frame, "Simulation frame")->check(CLI::IsMember({"lab", "effective"}));
  app.add_flag("--plot", g.plot, "Also write an SVG chart");
  auto* flux_opt = app.add_option("--flux", g.flux, "Loop flux in radians");
  app.add_option("--flux-frac", g.flux_frac, "Loop flux in units of 2 pi")->excludes(flux_opt);
  app.add_option("--flux-grid", g.flux_grid, "Flux sweep start:stop:count (radians)");
  app.add_option("--duration", g.duration, "Evolution time in ns");
  app.add_option("--sample", g.sample, "Output sampling interval in ns");

  auto* circulate = app.add_subcommand("circulate", "Single-photon circulation from |100>");
  int levels = 0;
  bool mean_occupation = false;
  circulate->add_option("--levels", levels, "Lab-frame levels per site");
  circulate->add_flag("--mean-occupation", mean_occupation, "Add <n_j> columns");

  auto* two_photon = app.add_subcommand("two-photon", "Two-photon circulation from |110>");
  two_photon->add_option("--levels", levels, "Lab-frame levels per site");

  auto* chevron = app.add_subcommand("chevron", "Two-site chevron");
  std::string chevron_mode = "static";
  std::string sweep = "-10:10:41";
  double chevron_dt = kLabDt;
  chevron->add_option("--mode", chevron_mode)->check(CLI::IsMember({"static", "parametric"}));
  chevron->add_option("--sweep", sweep, "Detuning grid start:stop:count (MHz)");
  chevron->add_option("--dt", chevron_dt, "Integration step (ns)");

  auto* spectrum = app.add_subcommand("spectrum", "Hard-core spectra over a flux grid");

  auto* adiabatic = app.add_subcommand("adiabatic", "Ramped ground-state preparation");
  RampSchedule schedule;
  std::string shape = "linear";
  int manifold = 1;
  adiabatic->add_option("--ramp", schedule.duration_ns, "Ramp duration (ns)");
  adiabatic->add_option("--shape", shape)->check(CLI::IsMember({"linear", "cosine"}));
  adiabatic->add_option("--bias", schedule.bias_mhz, "Initial on-site bias (MHz)");
  adiabatic->add_option("--manifold", manifold)->check(CLI::IsMember({1, 2}));

  auto* darkon = app.add_subcommand("darkon", "Mixed one- and two-photon circulation");
  int alpha_points = 11;
  darkon->add_option("--alphas", alpha_points, "Mixing angles on [0, pi/2]")->check(CLI::PositiveNumber);

  auto* entanglement = app.add_subcommand("entanglement", "Single-site purities during circulation");
  auto* eig_prep = app.add_subcommand("eig-prep", "Momentum eigenstate preparation");

  auto* fit = app.add_subcommand("fit", "Least-squares g0 from observed occupations");
  std::string observed;
  FitOptions fit_options;
  fit->add_option("--observed", observed, "CSV with t_ns, p_q1.. columns")->required();
  fit->add_option("--lo", fit_options.lo_mhz, "Scan lower bound (MHz)");
  fit->add_option("--hi", fit_options.hi_mhz, "Scan upper bound (MHz)");

  auto* compile = app.add_subcommand("compile-flux", "Link phases for target loop fluxes");
  std::vector<double> targets;
  compile->add_option("--targets", targets, "Target flux per fundamental cycle (radians)")->required();

  auto* validate_cmd = app.add_subcommand("validate-config", "Validate a device and print the RWA report");
  auto* lindblad = app.add_subcommand("decoherence", "T1 envelope against unitary circulation");
  auto* dephasing = app.add_subcommand("dephasing", "Idle versus coupled coherence under classical noise");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (validate_cmd->parsed()) return validate_config(g);
    DeviceSpec device = device_of(g);
    Frame frame = parse_frame(g.frame);
    auto duration = [&](double fallback) { return g.duration > 0.0 ? g.duration : fallback; };

    if (circulate->parsed() || two_photon->parsed()) {
      CirculationOptions o;
      o.flux = flux_of(g, device);
      o.frame = frame;
      o.duration_ns = duration(600.0);
      o.sample_ns = g.sample;
      o.levels = levels;
      o.mean_occupation = mean_occupation;
      persist(g, circulate->parsed() ? run_circulation(device, o) : run_two_photon(device, o));
    } else if (chevron->parsed()) {
      ChevronOptions o;
      o.mode = chevron_mode == "static" ? ChevronMode::Static : ChevronMode::Parametric;
      o.detunings_mhz = parse_grid(sweep);
      o.duration_ns = duration(400.0);
      o.sample_ns = g.sample;
      o.dt_ns = chevron_dt;
      persist(g, run_chevron(o), ChartKind::Heatmap, "sweep_mhz", "t_ns", "p_q1");
    } else if (spectrum->parsed()) {
      persist(g, run_spectrum(device, parse_grid(g.flux_grid)), ChartKind::Heatmap, "flux_rad", "band_index",
              "energy_mhz");
    } else if (adiabatic->parsed()) {
      AdiabaticOptions o;
      o.flux_grid = parse_grid(g.flux_grid);
      o.schedule = schedule;
      o.schedule.shape = shape == "linear" ? RampShape::Linear : RampShape::Cosine;
      o.manifold = manifold;
      persist(g, run_adiabatic(device, o));
    } else if (darkon->parsed()) {
      DarkonOptions o;
      o.flux = flux_of(g, device);
      o.duration_ns = duration(600.0);
      o.sample_ns = g.sample;
      for (int i = 0; i < alpha_points; ++i) {
        o.alphas.push_back(alpha_points == 1 ? 0.0 : kPi / 2.0 * i / (alpha_points - 1));
      }
      persist(g, run_darkon(device, o), ChartKind::Heatmap, "alpha_rad", "t_ns", "p_q3");
    } else if (entanglement->parsed()) {
      EntanglementOptions o;
      o.flux = flux_of(g, device);
      o.duration_ns = duration(600.0);
      o.sample_ns = g.sample;
      persist(g, run_entanglement(device, o));
    } else if (eig_prep->parsed()) {
      DeviceSpec dev = with_loop_flux(device, flux_of(g, device));
      persist(g, run_eigenstate_prep(dev));
    } else if (fit->parsed()) {
      fit_options.frame = frame;
      if (g.flux || g.flux_frac) fit_options.flux = flux_of(g, device);
      auto result = fit_g0(read_csv(observed), device, fit_options);
      persist(g, fit_result(result, device));
    } else if (compile->parsed()) {
      persist(g, run_compile_flux(device, targets));
    } else if (lindblad->parsed()) {
      DecoherenceOptions o;
      o.flux = flux_of(g, device);
      o.duration_ns = duration(600.0);
      o.sample_ns = g.sample;
      persist(g, run_lindblad_envelope(device, o));
    } else if (dephasing->parsed()) {
      DephasingOptions o;
      o.flux = flux_of(g, device);
      o.duration_ns = duration(600.0);
      o.sample_ns = g.sample;
      o.noise.seed = g.seed;
      persist(g, run_dephasing(device, o));
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedOperation& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  }
}
