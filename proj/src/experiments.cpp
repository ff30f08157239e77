#include "chiralsim/experiments.hpp"

#include "chiralsim/gauge.hpp"
#include "chiralsim/io.hpp"
#include "chiralsim/observables.hpp"
#include "chiralsim/signal.hpp"
#include "chiralsim/spectrum.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace chiralsim {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string num(double v) { return format_number(v); }

RunManifest manifest_for(const std::string& name, const DeviceSpec* device, const std::string& method, double dt,
                         std::uint64_t seed = 0) {
  RunManifest m;
  m.experiment = name;
  m.config_hash = device ? config_hash(*device) : hex64(fnv1a64(name));
  m.seed = seed;
  m.version = CHIRALSIM_VERSION;
  m.method = method;
  m.dt_ns = dt;
  return m;
}

bool has_loop(const DeviceSpec& device) { return !fundamental_cycles(LinkGraph::from_device(device)).empty(); }

DeviceSpec at_flux(const DeviceSpec& device, double flux) {
  return has_loop(device) ? with_loop_flux(device, flux) : device;
}

std::vector<int> one_hot(int sites, int occupied) {
  std::vector<int> occ(static_cast<std::size_t>(sites), 0);
  for (int s = 0; s < occupied && s < sites; ++s) occ[static_cast<std::size_t>(s)] = 1;
  return occ;
}

int first_index(const std::vector<int>& occ, int value) {
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (occ[i] == value) return static_cast<int>(i);
  }
  return 0;
}

std::string site_col(const std::string& prefix, int s) { return prefix + std::to_string(s + 1); }

// Evolution under a constant Hermitian matrix, exact through its eigenbasis.
struct ExactPropagator {
  EigenSystem es;
  explicit ExactPropagator(const CMatrix& h) : es(eigensystem(h)) {}
  CVector operator()(const CVector& psi, double t) const {
    CVector coeff = es.vectors.adjoint() * psi;
    for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff(i) *= std::polar(1.0, -es.values(i) * t);
    return es.vectors * coeff;
  }
};

// Centered running mean over `width` samples, truncated at the ends.
std::vector<double> moving_average(const std::vector<double>& values, int width) {
  if (width <= 1) return values;
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t left = width / 2, right = width - 1 - left;
  std::vector<double> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, i - left), b = std::min(n - 1, i + right);
    double sum = 0.0;
    for (std::ptrdiff_t k = a; k <= b; ++k) sum += values[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = sum / static_cast<double>(b - a + 1);
  }
  return out;
}

void require_three_sites(const DeviceSpec& device, const std::string& what) {
  if (device.num_sites() != 3) throw ConfigError(what + " needs a three-site device");
}

}  // namespace

Frame parse_frame(const std::string& text) {
  if (text == "lab") return Frame::Lab;
  if (text == "effective") return Frame::Effective;
  throw ConfigError("unknown frame '" + text + "' (lab|effective)");
}

std::string to_string(Frame frame) { return frame == Frame::Lab ? "lab" : "effective"; }

std::string config_hash(const DeviceSpec& device) { return hex64(fnv1a64(serialize_config(device))); }

OccupationRun simulate_occupations(const DeviceSpec& device, double flux, Frame frame, const std::vector<int>& initial,
                                   const std::vector<double>& grid, std::optional<double> dt_ns, int levels) {
  if (static_cast<int>(initial.size()) != device.num_sites()) {
    throw ConfigError("initial occupation has the wrong number of sites");
  }
  int total = std::accumulate(initial.begin(), initial.end(), 0);
  DeviceSpec dev = at_flux(device, flux);
  PropagatorConfig config;
  if (frame == Frame::Effective) {
    FockBasis basis(dev.num_sites(), 2, total);
    auto eff = build_effective(dev, basis);
    config.dt_ns = dt_ns.value_or(dev.simulation.dt_ns.value_or(kEffectiveDt));
    auto tr = evolve_unitary(Generator::effective(eff), basis.ket(initial), grid, config);
    return {basis, std::move(tr), eff.warnings, eff.hops};
  }
  int d = levels > 0 ? levels : std::max(2, dev.simulation.levels);
  FockBasis basis(dev.num_sites(), d, total);
  LabHamiltonian lab(dev, basis);
  config.dt_ns = dt_ns.value_or(dev.simulation.dt_ns.value_or(kLabDt));
  auto tr = evolve_unitary(Generator::lab(lab), basis.ket(initial), grid, config);
  return {basis, std::move(tr), dev.warnings, {}};
}

std::vector<std::vector<double>> occupation_traces(const Trajectory& trajectory) {
  const FockBasis& basis = trajectory.basis;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(basis.num_sites()));
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    RVector pop = trajectory.mixed() ? RVector(trajectory.rhos[i].diagonal().real())
                                     : RVector(trajectory.states[i].cwiseAbs2());
    for (int s = 0; s < basis.num_sites(); ++s) {
      double p = 0.0;
      for (Eigen::Index a = 0; a < basis.dim(); ++a) {
        if (basis.occupation(a, s) >= 1) p += pop(a);
      }
      out[static_cast<std::size_t>(s)].push_back(p);
    }
  }
  return out;
}

namespace {

std::vector<std::vector<double>> mean_traces(const Trajectory& trajectory) {
  const FockBasis& basis = trajectory.basis;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(basis.num_sites()));
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    RVector pop = trajectory.states[i].cwiseAbs2();
    for (int s = 0; s < basis.num_sites(); ++s) {
      double n = 0.0;
      for (Eigen::Index a = 0; a < basis.dim(); ++a) n += basis.occupation(a, s) * pop(a);
      out[static_cast<std::size_t>(s)].push_back(n);
    }
  }
  return out;
}

double detect_run_period(const DeviceSpec& device, const CirculationOptions& options, const std::vector<int>& initial,
                         const OccupationRun& main, int site) {
  if (options.duration_ns >= options.detection_ns) {
    return detect_period(main.trajectory.times, occupation_traces(main.trajectory)[static_cast<std::size_t>(site)]);
  }
  auto grid = time_grid(0.0, options.detection_ns, options.sample_ns);
  auto run = simulate_occupations(device, options.flux, options.frame, initial, grid, options.dt_ns, options.levels);
  return detect_period(grid, occupation_traces(run.trajectory)[static_cast<std::size_t>(site)]);
}

void record_drift(RunManifest& m, const Trajectory& tr) {
  m.method = tr.method;
  m.dt_ns = tr.dt_ns;
  m.drift.emplace_back("norm_drift", tr.norm_drift);
  m.drift.emplace_back("halving_deviation", tr.verify_deviation);
}

}  // namespace

ExperimentResult run_circulation(const DeviceSpec& device, const CirculationOptions& options) {
  auto start = Clock::now();
  const int n = device.num_sites();
  auto initial = options.initial.empty() ? one_hot(n, 1) : options.initial;
  auto grid = time_grid(0.0, options.duration_ns, options.sample_ns);
  auto run = simulate_occupations(device, options.flux, options.frame, initial, grid, options.dt_ns, options.levels);
  DeviceSpec dev = at_flux(device, options.flux);

  ExperimentResult r;
  r.name = "circulation";
  r.parameters = {{"flux_rad", num(options.flux)},
                  {"frame", to_string(options.frame)},
                  {"duration_ns", num(options.duration_ns)},
                  {"sample_ns", num(options.sample_ns)}};
  auto p = occupation_traces(run.trajectory);
  std::vector<std::vector<double>> nmean;
  r.table.columns = {"t_ns"};
  for (int s = 0; s < n; ++s) r.table.columns.push_back(site_col("p_q", s));
  if (options.mean_occupation) {
    nmean = mean_traces(run.trajectory);
    for (int s = 0; s < n; ++s) r.table.columns.push_back(site_col("n_q", s));
  }
  std::vector<CMatrix> currents;
  bool with_currents = options.frame == Frame::Effective && n >= 3;
  if (with_currents) {
    for (auto [a, b] : loop_links(dev)) {
      r.table.columns.push_back("i_" + std::to_string(a + 1) + std::to_string(b + 1));
      currents.push_back(bond_current_op(run.basis, a, b, loop_phase(dev, a, b)));
    }
    r.table.columns.push_back("i_chiral");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> row{grid[i]};
    for (int s = 0; s < n; ++s) row.push_back(p[static_cast<std::size_t>(s)][i]);
    for (std::size_t s = 0; s < nmean.size(); ++s) row.push_back(nmean[s][i]);
    if (with_currents) {
      double chiral = 0.0;
      for (const auto& c : currents) {
        double v = expectation(c, run.trajectory.states[i]);
        row.push_back(v);
        chiral += v;
      }
      row.push_back(chiral);
    }
    r.table.add(std::move(row));
  }

  int site = first_index(initial, 1);
  auto order = peak_order(grid, p, site);
  r.labels["peak_order"] = order.label(site);
  r.metrics["orientation"] = order.orientation;
  if (options.detect_period) r.metrics["period_ns"] = detect_run_period(device, options, initial, run, site);
  r.notes = run.warnings;
  r.manifest = manifest_for(r.name, &dev, "", 0.0);
  record_drift(r.manifest, run.trajectory);
  r.manifest.wall_ms.emplace_back("total", elapsed_ms(start));
  return r;
}

ExperimentResult run_two_photon(const DeviceSpec& device, const CirculationOptions& options) {
  auto start = Clock::now();
  const int n = device.num_sites();
  auto initial = options.initial.empty() ? one_hot(n, 2) : options.initial;
  auto grid = time_grid(0.0, options.duration_ns, options.sample_ns);
  auto run = simulate_occupations(device, options.flux, options.frame, initial, grid, options.dt_ns, options.levels);
  DeviceSpec dev = at_flux(device, options.flux);

  ExperimentResult r;
  r.name = "two_photon";
  r.parameters = {{"flux_rad", num(options.flux)},
                  {"frame", to_string(options.frame)},
                  {"duration_ns", num(options.duration_ns)},
                  {"sample_ns", num(options.sample_ns)}};
  auto p = occupation_traces(run.trajectory);
  std::vector<std::vector<double>> v(p.size());
  for (std::size_t s = 0; s < p.size(); ++s) {
    for (double x : p[s]) v[s].push_back(1.0 - x);
  }
  r.table.columns = {"t_ns"};
  for (int s = 0; s < n; ++s) r.table.columns.push_back(site_col("p_q", s));
  for (int s = 0; s < n; ++s) r.table.columns.push_back(site_col("v_q", s));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> row{grid[i]};
    for (int s = 0; s < n; ++s) row.push_back(p[static_cast<std::size_t>(s)][i]);
    for (int s = 0; s < n; ++s) row.push_back(v[static_cast<std::size_t>(s)][i]);
    r.table.add(std::move(row));
  }
  int hole = first_index(initial, 0);
  auto order = peak_order(grid, v, hole);
  r.labels["vacancy_order"] = order.label(hole);
  r.metrics["vacancy_orientation"] = order.orientation;
  if (options.detect_period) r.metrics["period_ns"] = detect_run_period(device, options, initial, run, hole);
  r.notes = run.warnings;
  r.manifest = manifest_for(r.name, &dev, "", 0.0);
  record_drift(r.manifest, run.trajectory);
  r.manifest.wall_ms.emplace_back("total", elapsed_ms(start));
  return r;
}

ExperimentResult run_chevron(const ChevronOptions& options) {
  auto start = Clock::now();
  if (options.detunings_mhz.empty()) throw ConfigError("chevron sweep grid is empty");
  const bool parametric = options.mode == ChevronMode::Parametric;
  const double g = options.g_mhz > 0.0 ? options.g_mhz : (parametric ? 4.0 : 2.0);
  auto grid = time_grid(0.0, options.duration_ns, options.sample_ns);

  const std::size_t count = options.detunings_mhz.size();
  std::vector<std::vector<double>> traces(count);
  std::vector<double> drift(count), deviation(count);
  parallel_for(count, [&](std::size_t i) {
    double delta = options.detunings_mhz[i];
    DeviceSpec dev = parametric
                         ? two_site_device(options.base_omega_ghz + options.parametric_split_mhz * 1e-3,
                                           options.base_omega_ghz, g, options.parametric_split_mhz + delta, 0.0)
                         : two_site_device(options.base_omega_ghz + delta * 1e-3, options.base_omega_ghz, 0.0, 0.0, g);
    auto run = simulate_occupations(dev, 0.0, Frame::Lab, {1, 0}, grid, options.dt_ns, 2);
    traces[i] = occupation_traces(run.trajectory)[0];
    drift[i] = run.trajectory.norm_drift;
    deviation[i] = run.trajectory.verify_deviation;
  });

  ExperimentResult r;
  r.name = parametric ? "chevron_parametric" : "chevron_static";
  r.parameters = {{"mode", parametric ? "parametric" : "static"},
                  {"coupling_mhz", num(g)},
                  {"duration_ns", num(options.duration_ns)},
                  {"dt_ns", num(options.dt_ns)}};
  r.table.columns = {"sweep_mhz", "detuning_mhz", "t_ns", "p_q1"};
  for (std::size_t i = 0; i < count; ++i) {
    double delta = options.detunings_mhz[i];
    double sweep = parametric ? options.parametric_split_mhz + delta : delta;
    for (std::size_t k = 0; k < grid.size(); ++k) r.table.add({sweep, delta, grid[k], traces[i][k]});
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (std::abs(options.detunings_mhz[i]) < 1e-12) {
      std::vector<double> empty;
      for (double x : traces[i]) empty.push_back(1.0 - x);
      if (parametric) {
        double ripple_ns = 1e3 / (2.0 * options.parametric_split_mhz);
        empty = moving_average(empty, 2 * static_cast<int>(std::lround(ripple_ns / (2.0 * options.sample_ns))) + 1);
      }
      r.metrics["transfer_ns"] = first_peak_time(grid, empty, 0.5);
      r.metrics["resonant_min_p_q1"] = *std::min_element(traces[i].begin(), traces[i].end());
    }
  }
  r.manifest = manifest_for(r.name, nullptr, "rk4+halving", options.dt_ns);
  r.manifest.drift.emplace_back("norm_drift", *std::max_element(drift.begin(), drift.end()));
  r.manifest.drift.emplace_back("halving_deviation", *std::max_element(deviation.begin(), deviation.end()));
  r.manifest.wall_ms.emplace_back("total", elapsed_ms(start));
  return r;
}

double RampSchedule::progress(double t) const {
  if (!(duration_ns > 0.0)) throw ConfigError("ramp duration must be positive");
  double u = std::clamp(t / duration_ns, 0.0, 1.0);
  return shape == RampShape::Linear ? u : 0.5 * (1.0 - std::cos(kPi * u));
}

double ground_state_current(const DeviceSpec& device, double flux, int manifold) {
  DeviceSpec dev = at_flux(device, flux);
  FockBasis basis(dev.num_sites(), 2, manifold);
  auto eff = build_effective(dev, basis);
  auto es = eigensystem(eff.matrix);
  auto [first, last] = degenerate_clusters(es.values).front();
  CMatrix op = chiral_current_op(basis, dev);
  double sum = 0.0;
  for (Eigen::Index c = first; c < last; ++c) sum += expectation(op, CVector(es.vectors.col(c)));
  return sum / static_cast<double>(last - first);
}

RampOutcome ramp_to_ground(const DeviceSpec& device, double flux, int manifold, const RampSchedule& schedule,
                           double dt_ns) {
  DeviceSpec dev = at_flux(device, flux);
  const int n = dev.num_sites();
  FockBasis basis(n, 2, manifold);
  auto eff = build_effective(dev, basis);
  RVector bias = RVector::Zero(basis.dim());
  for (Eigen::Index a = 0; a < basis.dim(); ++a) {
    for (int s = 0; s < n; ++s) {
      double eps = n > 1 ? 2.0 * s / (n - 1) - 1.0 : 0.0;
      bias(a) += units::mhz(schedule.bias_mhz) * eps * basis.occupation(a, s);
    }
  }
  Generator gen{basis, {}, RVector(), true};
  gen.matrix = [h = eff.matrix, bias, schedule](double t) {
    double s = schedule.progress(t);
    CMatrix m = s * h;
    m.diagonal() += ((1.0 - s) * bias).cast<Complex>();
    return m;
  };
  PropagatorConfig config;
  config.dt_ns = dt_ns;
  auto tr = evolve_unitary(gen, basis.ket(one_hot(n, manifold)), {0.0, schedule.duration_ns}, config);

  RampOutcome out;
  out.state = tr.states.back();
  auto es = eigensystem(eff.matrix);
  auto [first, last] = degenerate_clusters(es.values).front();
  for (Eigen::Index c = first; c < last; ++c) out.fidelity += std::norm(es.vectors.col(c).dot(out.state));
  out.chiral_current = expectation(chiral_current_op(basis, dev), out.state);
  return out;
}

ExperimentResult run_adiabatic(const DeviceSpec& device, const AdiabaticOptions& options) {
  auto start = Clock::now();
  require_three_sites(device, "adiabatic preparation");
  if (options.flux_grid.empty()) throw ConfigError("flux grid is empty");
  const std::size_t count = options.flux_grid.size();
  std::vector<std::vector<double>> rows(count);
  parallel_for(count, [&](std::size_t i) {
    double phi = options.flux_grid[i];
    auto out = ramp_to_ground(device, phi, options.manifold, options.schedule, options.dt_ns);
    double ref = ground_state_current(device, phi, options.manifold);
    FockBasis basis(device.num_sites(), 2, options.manifold);
    auto es = eigensystem(build_effective(at_flux(device, phi), basis).matrix);
    rows[i] = {phi, out.chiral_current, ref, out.fidelity, units::to_mhz(es.gap())};
  });
  ExperimentResult r;
  r.name = "adiabatic";
  r.parameters = {{"manifold", std::to_string(options.manifold)},
                  {"ramp_ns", num(options.schedule.duration_ns)},
                  {"shape", options.schedule.shape == RampShape::Linear ? "linear" : "cosine"},
                  {"bias_mhz", num(options.schedule.bias_mhz)}};
  r.table.columns = {"flux_rad", "i_chiral", "i_chiral_ref", "fidelity", "gap_mhz"};
  for (auto& row : rows) r.table.add(std::move(row));
  r.manifest = manifest_for(r.name, &device, "rk4+halving", options.dt_ns);
  r.manifest.wall_ms.emplace_back("total", elapsed_ms(start));
  return r;
}

ExperimentResult run_darkon(const DeviceSpec& device, const DarkonOptions& options) {
  auto start = Clock::now();
  require_three_sites(device, "darkon sweep");
  if (options.alphas.empty()) throw ConfigError("alpha grid is empty");
  for (double a : options.alphas) {
    if (a < -1e-12 || a > kPi / 2.0 + 1e-12) throw ConfigError("mixing angle outside [0, pi/2]");
  }
  DeviceSpec dev = at_flux(device, options.flux);
  FockBasis basis(3, 2);
  auto eff = build_effective(dev, basis);
  auto gen = Generator::effective(eff);
  auto grid = time_grid(0.0, options.duration_ns, options.sample_ns);
  CVector one = basis.ket({1, 0, 0});
  CVector two = basis.ket({0, 1, 1});

  auto traces_for = [&](double alpha) {
    CVector psi = std::cos(alpha) * one + std::sin(alpha) * two;
    return occupation_traces(evolve_unitary(gen, psi, grid));
  };
  auto pure_one = traces_for(0.0);
  auto pure_two = traces_for(kPi / 2.0);

  const std::size_t count = options.alphas.size();
  std::vector<std::vector<std::vector<double>>> traces(count);
  parallel_for(count, [&](std::size_t i) { traces[i] = traces_for(options.alphas[i]); });

  ExperimentResult r;
  r.name = "darkon";
  r.parameters = {{"flux_rad", num(options.flux)}, {"duration_ns", num(options.duration_ns)}};
  r.table.columns = {"alpha_rad", "t_ns", "p_q1", "p_q2", "p_q3"};
  double mixing = 0.0;
  double best_var = std::numeric_limits<double>::infinity();
  double best_alpha = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    double alpha = options.alphas[i];
    double c2 = std::pow(std::cos(alpha), 2), s2 = std::pow(std::sin(alpha), 2);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      r.table.add({alpha, grid[k], traces[i][0][k], traces[i][1][k], traces[i][2][k]});
      for (std::size_t s = 0; s < 3; ++s) {
        mixing = std::max(mixing, std::abs(traces[i][s][k] - (c2 * pure_one[s][k] + s2 * pure_two[s][k])));
      }
    }
    const auto& q3 = traces[i][2];
    double mean = std::accumulate(q3.begin(), q3.end(), 0.0) / static_cast<double>(q3.size());
    double var = 0.0;
    for (double x : q3) var += (x - mean) * (x - mean);
    var /= static_cast<double>(q3.size());
    if (var < best_var) {
      best_var = var;
      best_alpha = alpha;
    }
  }
  r.metrics["mixing_identity_error"] = mixing;
  r.metrics["alpha_min_variance_q3"] = best_alpha;
  r.metrics["min_variance_q3"] = best_var;
  r.manifest = manifest_for(r.name, &dev, "rk4+halving", kEffectiveDt);
  r.manifest.wall_ms.emplace_back("total", elapsed_ms(start));
  return r;
}

ExperimentResult run_eigenstate_prep(const DeviceSpec& device, const EigenPrepOptions& options) {
  auto start = Clock::now();
  require_three_sites(device, "eigenstate preparation");
  const int n = 3;
  auto graph = LinkGraph::from_device(device);
  auto alpha = uniform_ring_gauge(graph, device.link_phases());
  DeviceSpec flat = device.with_phases(std::vector<double>(device.links.size(), 0.0));

  ExperimentResult r;
  r.name = "eigenstate_prep";
  r.parameters = {{"flux_rad", num(device_flux(device))}};
  r.table.columns = {"manifold", "momentum", "t_star_ns", "energy_mhz", "variance_mhz2", "exact_energy_mhz",
                     "p_q1", "p_q2", "p_q3"};
  const double mhz2 = std::pow(units::mhz(1.0), 2);
  double worst_variance = 0.0;
  for (int manifold : options.manifolds) {
    if (manifold != 1 && manifold != 2) throw ConfigError("eigenstate preparation supports manifolds 1 and 2");
    FockBasis basis(n, 2, manifold);
    auto target_h = build_effective(device, basis).matrix;
    auto exact = eigensystem(target_h);
    ExactPropagator uniform(build_effective(flat, basis).matrix);
    CVector psi0 = basis.ket(one_hot(n, manifold));
    const double level = static_cast<double>(manifold) / n;

    auto spread = [&](double t) {
      CVector psi = uniform(psi0, t);
      double worst = 0.0;
      for (int s = 0; s < n; ++s) {
        double p = 0.0;
        for (Eigen::Index a = 0; a < basis.dim(); ++a) {
          if (basis.occupation(a, s) >= 1) p += std::norm(psi(a));
        }
        worst = std::max(worst, std::abs(p - level));
      }
      return worst;
    };
    // First local minimum of the population spread, then golden-section refinement.
    double t_star = -1.0;
    double prev = spread(0.0), cur = spread(options.scan_step_ns);
    for (double t = options.scan_step_ns; t < options.scan_limit_ns; t += options.scan_step_ns) {
      double next = spread(t + options.scan_step_ns);
      if (cur <= prev && cur <= next && cur < 0.05) {
        double a = t - options.scan_step_ns, b = t + options.scan_step_ns;
        const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - ratio * (b - a), d = a + ratio * (b - a);
        while (b - a > 1e-12) {
          if (spread(c) < spread(d)) {
            b = d;
          } else {
            a = c;
          }
          c = b - ratio * (b - a);
          d = a + ratio * (b - a);
        }
        t_star = 0.5 * (a + b);
        break;
      }
      prev = cur;
      cur = next;
    }
    if (t_star < 0.0 || spread(t_star) > 1e-6) {
      throw NumericalError("equal-population condition is unreachable under uniform coupling (manifold " +
                           std::to_string(manifold) + ")");
    }
    CVector stage1 = uniform(psi0, t_star);

    for (int m : options.momenta) {
      double k = kTwoPi * m / n;
      std::vector<double> theta(static_cast<std::size_t>(n), 0.0);
      for (Eigen::Index a = 0; a < basis.dim(); ++a) {
        double current = std::arg(stage1(a));
        if (manifold == 1) {
          int j = first_index(std::vector<int>(basis.occupation(a).begin(), basis.occupation(a).end()), 1);
          theta[static_cast<std::size_t>(j)] = k * j - alpha[static_cast<std::size_t>(j)] - current;
        } else {
          int h = first_index(std::vector<int>(basis.occupation(a).begin(), basis.occupation(a).end()), 0);
          theta[static_cast<std::size_t>(h)] = -(k * h + alpha[static_cast<std::size_t>(h)] - current);
        }
      }
      CVector psi = stage1;
      for (Eigen::Index a = 0; a < basis.dim(); ++a) {
        double phase = 0.0;
        for (int s = 0; s < n; ++s) phase += theta[static_cast<std::size_t>(s)] * basis.occupation(a, s);
        psi(a) *= std::polar(1.0, phase);
      }
      double e = energy(target_h, psi);
      double var = energy_variance(target_h, psi);
      worst_variance = std::max(worst_variance, var / mhz2);
      Eigen::Index nearest;
      (exact.values.array() - e).abs().minCoeff(&nearest);
      std::vector<double> row{static_cast<double>(manifold), static_cast<double>(m), t_star, units::to_mhz(e),
                              var / mhz2, units::to_mhz(exact.values(nearest))};
      for (int s = 0; s < n; ++s) {
        double p = 0.0;
        for (Eigen::Index a = 0; a < basis.dim(); ++a) {
          if (basis.occupation(a, s) >= 1) p += std::norm(stage1(a));
        }
        row.push_back(p);
      }
      r.table.add(std::move(row));
    }
  }
  r.metrics["max_variance_mhz2"] = worst_variance;
  r.notes.push_back("equal-population time is computed (t_star_ns); the nominal 40 ns value is not used");
  r.manifest = manifest_for(r.name, &device, "exact-eigenbasis", 0.0);
  r.manifest.wall_ms.emplace_back("total", elapsed_ms(start));
  return r;
}

ExperimentResult run_entanglement(const DeviceSpec& device, const EntanglementOptions& options) {
  auto start = Clock::now();
  const int n = device.num_sites();
  auto grid = time_grid(0.0, options.duration_ns, options.sample_ns);
  auto run = simulate_occupations(device, options.flux, Frame::Effective, options.initial, grid);
  auto p = occupation_traces(run.trajectory);

  std::vector<std::vector<double>> pur(static_cast<std::size_t>(n));
  std::vector<double> min_purity;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double lowest = 1.0;
    for (int s = 0; s < n; ++s) {
      double v = purity(reduced_density(run.basis, run.trajectory.states[i], s));
      pur[static_cast<std::size_t>(s)].push_back(v);
      lowest = std::min(lowest, v);
    }
    min_purity.push_back(lowest);
  }
  std::vector<bool> instant(grid.size(), false);
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    instant[i] = min_purity[i] >= min_purity[i - 1] && min_purity[i] >= min_purity[i + 1] &&
                 min_purity[i] > 1.0 - options.epsilon;
  }

  ExperimentResult r;
  r.name = "entanglement";
  r.parameters = {{"flux_rad", num(options.flux)}, {"duration_ns", num(options.duration_ns)},
                  {"epsilon", num(options.epsilon)}};
  r.table.columns = {"t_ns"};
  for (int s = 0; s < n; ++s) r.table.columns.push_back(site_col("p_q", s));
  for (int s = 0; s < n; ++s) r.table.columns.push_back(site_col("purity_q", s));
  r.table.columns.push_back("disentangled");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> row{grid[i]};
    for (int s = 0; s < n; ++s) row.push_back(p[static_cast<std::size_t>(s)][i]);
    for (int s = 0; s < n; ++s) row.push_back(pur[static_cast<std::size_t>(s)][i]);
    row.push_back(instant[i] ? 1.0 : 0.0);
    r.table.add(std::move(row));
  }

  // Distance (grid steps) from each instant to the nearest occupation maximum.
  std::vector<std::size_t> maxima;
  for (const auto& trace : p) {
    for (std::size_t i = 1; i + 1 < trace.size(); ++i) {
      if (trace[i] >= trace[i - 1] && trace[i] >= trace[i + 1]) maxima.push_back(i);
    }
  }
  double worst_alignment = 0.0;
  int instants = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!instant[i]) continue;
    ++instants;
    double best = std::numeric_limits<double>::infinity();
    for (auto m : maxima) best = std::min(best, std::abs(static_cast<double>(m) - static_cast<double>(i)));
    worst_alignment = std::max(worst_alignment, best);
  }
  r.metrics["instants"] = instants;
  r.metrics["max_alignment_steps"] = instants ? worst_alignment : 0.0;
  r.metrics["min_purity"] = *std::min_element(min_purity.begin(), min_purity.end());
  double top = 0.0;
  for (const auto& trace : pur) top = std::max(top, *std::max_element(trace.begin(), trace.end()));
  r.metrics["max_purity"] = top;
  r.metrics["initial_min_purity"] = min_purity.front();
  r.manifest = manifest_for(r.name, &device, "", 0.0);
  record_drift(r.manifest, run.trajectory);
  r.manifest.wall_ms.emplace_back("total", elapsed_ms(start));
  return r;
}

FitResult fit_g0(const Table& observed, const DeviceSpec& device, const FitOptions& options) {
  if (!(options.lo_mhz > 0.0) || !(options.hi_mhz > options.lo_mhz) || options.scan_points < 3) {
    throw ConfigError("invalid g0 scan range");
  }
  const int n = device.num_sites();
  auto times = observed.column("t_ns");
  std::vector<std::vector<double>> obs;
  for (int s = 0; s < n; ++s) obs.push_back(observed.column(site_col("p_q", s)));
  const double flux = options.flux.value_or(has_loop(device) ? device_flux(device) : 0.0);
  auto initial = one_hot(n, 1);

  auto residual = [&](double g) {
    auto run = simulate_occupations(device.with_g0(g), flux, options.frame, initial, times);
    auto sim = occupation_traces(run.trajectory);
    double sum = 0.0;
    for (int s = 0; s < n; ++s) {
      for (std::size_t i = 0; i < times.size(); ++i) {
        double d = sim[static_cast<std::size_t>(s)][i] - obs[static_cast<std::size_t>(s)][i];
        sum += d * d;
      }
    }
    return sum;
  };

  FitResult fit;
  const auto points = static_cast<std::size_t>(options.scan_points);
  std::vector<double> gs(points), rs(points);
  for (std::size_t i = 0; i < points; ++i) {
    gs[i] = options.lo_mhz + (options.hi_mhz - options.lo_mhz) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  parallel_for(points, [&](std::size_t i) { rs[i] = residual(gs[i]); });
  for (std::size_t i = 0; i < points; ++i) fit.curve.emplace_back(gs[i], rs[i]);

  auto best = static_cast<std::size_t>(std::min_element(rs.begin(), rs.end()) - rs.begin());
  double lo = *std::min_element(rs.begin(), rs.end()), hi = *std::max_element(rs.begin(), rs.end());
  int minima = 0;
  for (std::size_t i = 0; i < points; ++i) {
    bool left = i == 0 || rs[i] < rs[i - 1];
    bool right = i + 1 == points || rs[i] < rs[i + 1];
    if (left && right) ++minima;
  }
  bool constant_input = true;
  for (const auto& trace : obs) {
    auto [mn, mx] = std::minmax_element(trace.begin(), trace.end());
    constant_input = constant_input && (*mx - *mn) < 1e-6;
  }
  auto curve_text = [&] {
    std::string s;
    for (auto [g, v] : fit.curve) s += " " + num(g) + ":" + num(v);
    return s;
  };
  if (constant_input || hi - lo <= 1e-3 * std::max(hi, 1e-12)) {
    fit.warnings.push_back("residual is flat over the scan; g0 is not identifiable from constant occupations;" +
                           curve_text());
  }
  if (minima > 1) fit.warnings.push_back("residual is not unimodal over the scan;" + curve_text());
  if (best == 0 || best + 1 == points) fit.warnings.push_back("best scan point lies on the scan boundary");

  double a = gs[best == 0 ? 0 : best - 1];
  double b = gs[best + 1 == points ? best : best + 1];
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = residual(c), fd = residual(d);
  while (b - a > options.tolerance_mhz) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = residual(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = residual(d);
    }
  }
  fit.g0_mhz = 0.5 * (a + b);
  fit.residual = residual(fit.g0_mhz);
  return fit;
}

ExperimentResult fit_result(const FitResult& fit, const DeviceSpec& device) {
  ExperimentResult r;
  r.name = "fit";
  r.table.columns = {"g0_mhz", "residual"};
  for (auto [g, v] : fit.curve) r.table.add({g, v});
  r.metrics["g0_mhz"] = fit.g0_mhz;
  r.metrics["residual"] = fit.residual;
  r.notes = fit.warnings;
  r.manifest = manifest_for(r.name, &device, "coarse-scan+golden-section", 0.0);
  return r;
}

TrsResult trs_metric(const DeviceSpec& device, double flux, int samples, double detection_ns) {
  const int n = device.num_sites();
  auto initial = one_hot(n, 1);
  auto long_grid = time_grid(0.0, detection_ns, 1.0);
  auto detection = simulate_occupations(device, flux, Frame::Effective, initial, long_grid);
  TrsResult out;
  out.period_ns = detect_period(long_grid, occupation_traces(detection.trajectory)[0]);
  std::vector<double> grid;
  for (int i = 0; i <= samples; ++i) grid.push_back(out.period_ns * i / samples);
  auto run = simulate_occupations(device, flux, Frame::Effective, initial, grid);
  auto p = occupation_traces(run.trajectory);
  for (const auto& trace : p) {
    for (int i = 0; i <= samples; ++i) {
      out.metric = std::max(out.metric, std::abs(trace[static_cast<std::size_t>(i)] -
                                                 trace[static_cast<std::size_t>(samples - i)]));
    }
  }
  return out;
}

ExperimentResult run_spectrum(const DeviceSpec& device, const std::vector<double>& grid,
                              const std::vector<int>& manifolds) {
  auto start = Clock::now();
  ExperimentResult r;
  r.name = "spectrum";
  r.parameters = {{"points", std::to_string(grid.size())}};
  r.table.columns = {"flux_rad", "manifold", "band_index", "energy_mhz", "gap_mhz"};
  double g0 = device.links.empty() ? 0.0 : device.links.front().g0_mhz;
  for (int m : manifolds) {
    auto sweep = flux_sweep(device, grid, m);
    double max_gap = -1.0, max_at = 0.0, zero_gap = 0.0, zero_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& es = sweep.points[i];
      double gap = units::to_mhz(es.gap());
      for (Eigen::Index b = 0; b < es.values.size(); ++b) {
        r.table.add({grid[i], static_cast<double>(m), static_cast<double>(b), units::to_mhz(es.values(b)), gap});
      }
      if (gap > max_gap + 1e-9) {
        max_gap = gap;
        max_at = grid[i];
      }
      if (std::abs(grid[i]) < zero_dist) {
        zero_dist = std::abs(grid[i]);
        zero_gap = gap;
      }
    }
    std::string tag = "_m" + std::to_string(m);
    r.metrics["max_gap_mhz" + tag] = max_gap;
    r.metrics["max_gap_flux" + tag] = max_at;
    r.metrics["gap_near_zero_mhz" + tag] = zero_gap;
    r.notes.push_back("manifold " + std::to_string(m) + ": maximum gap " + num(max_gap) + " MHz at flux " +
                      num(max_at) + "; 1.5 g0 = " + num(1.5 * g0) + " MHz (J = g0/2), 3 g0 = " + num(3.0 * g0) +
                      " MHz (inconsistent with the measured periods)");
  }
  r.metrics["candidate_half_mhz"] = 1.5 * g0;
  r.metrics["candidate_three_g0_mhz"] = 3.0 * g0;
  r.manifest = manifest_for(r.name, &device, "hermitian-eigensolver", 0.0);
  r.manifest.wall_ms.emplace_back("total", elapsed_ms(start));
  return r;
}

ExperimentResult run_compile_flux(const DeviceSpec& device, const std::vector<double>& targets) {
  auto graph = LinkGraph::from_device(device);
  auto phases = compile_fluxes(graph, targets);
  auto cycles = fundamental_cycles(graph);
  double worst = 0.0;
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    worst = std::max(worst, std::abs(wrap_phase(loop_flux(graph, phases, cycles[c]) - targets[c])));
  }
  ExperimentResult r;
  r.name = "compile_flux";
  r.table.columns = {"link", "site_j", "site_k", "phi_rad"};
  for (std::size_t i = 0; i < phases.size(); ++i) {
    r.table.add({static_cast<double>(i + 1), static_cast<double>(graph.links[i].first + 1),
                 static_cast<double>(graph.links[i].second + 1), phases[i]});
  }
  r.metrics["max_flux_error"] = worst;
  r.manifest = manifest_for(r.name, &device, "spanning-tree", 0.0);
  return r;
}

ExperimentResult run_lindblad_envelope(const DeviceSpec& device, const DecoherenceOptions& options) {
  auto start = Clock::now();
  const int n = device.num_sites();
  DeviceSpec dev = at_flux(device, options.flux);
  for (auto& s : dev.sites) s.t1_us = options.t1_us;
  FockBasis basis(n, 2);
  auto eff = build_effective(dev, basis);
  auto gen = Generator::effective(eff);
  auto grid = time_grid(0.0, options.duration_ns, options.sample_ns);
  CVector psi0 = basis.ket(one_hot(n, 1));
  auto unitary = evolve_unitary(gen, psi0, grid);
  auto open = evolve_lindblad(gen, CMatrix(psi0 * psi0.adjoint()), NoiseChannel::from_device(dev), grid);
  auto pu = occupation_traces(unitary);
  auto pl = occupation_traces(open);
  CMatrix total = total_number(basis);

  ExperimentResult r;
  r.name = "lindblad";
  r.parameters = {{"flux_rad", num(options.flux)}, {"t1_us", num(options.t1_us)},
                  {"duration_ns", num(options.duration_ns)}};
  r.table.columns = {"t_ns"};
  for (int s = 0; s < n; ++s) r.table.columns.push_back(site_col("p_q", s));
  for (int s = 0; s < n; ++s) r.table.columns.push_back(site_col("u_q", s));
  r.table.columns.push_back("n_total");
  double worst = 0.0, lowest = 1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> row{grid[i]};
    for (int s = 0; s < n; ++s) row.push_back(pl[static_cast<std::size_t>(s)][i]);
    for (int s = 0; s < n; ++s) row.push_back(pu[static_cast<std::size_t>(s)][i]);
    double nt = expectation(total, open.rhos[i]);
    row.push_back(nt);
    lowest = std::min(lowest, nt);
    for (int s = 0; s < n; ++s) {
      worst = std::max(worst, std::abs(pl[static_cast<std::size_t>(s)][i] - pu[static_cast<std::size_t>(s)][i]));
    }
    r.table.add(std::move(row));
  }
  r.metrics["max_deviation"] = worst;
  r.metrics["min_total"] = lowest;
  r.metrics["envelope_floor"] = std::exp(-options.duration_ns / units::us(options.t1_us));
  r.metrics["min_eigenvalue"] = open.min_eigenvalue;
  r.manifest = manifest_for(r.name, &dev, "", 0.0);
  record_drift(r.manifest, open);
  r.manifest.wall_ms.emplace_back("total", elapsed_ms(start));
  return r;
}

ExperimentResult run_dephasing(const DeviceSpec& device, const DephasingOptions& options) {
  auto start = Clock::now();
  const int n = device.num_sites();
  DeviceSpec dev = at_flux(device, options.flux);
  FockBasis basis(n, 2);
  auto eff = build_effective(dev, basis);
  auto grid = time_grid(0.0, options.duration_ns, options.sample_ns);
  CVector vac = basis.ket(std::vector<int>(static_cast<std::size_t>(n), 0));
  CVector one = basis.ket(one_hot(n, 1));
  CVector psi0 = (vac + one) / std::sqrt(2.0);
  Eigen::Index vac_index = basis.index_of(std::vector<int>(static_cast<std::size_t>(n), 0));

  auto coherence = [&](const CMatrix& h) {
    auto gen = Generator::constant(basis, h);
    auto tr = evolve_noisy_ensemble(gen, psi0, options.noise, grid);
    ExactPropagator ideal(h);
    std::vector<double> out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CVector target = ideal(one, grid[i]);
      out.push_back(2.0 * std::abs(tr.rhos[i].row(vac_index).dot(target.conjugate())));
    }
    return std::make_pair(out, tr);
  };
  auto [idle, idle_tr] = coherence(CMatrix::Zero(basis.dim(), basis.dim()));
  auto [driven, driven_tr] = coherence(eff.matrix);

  ExperimentResult r;
  r.name = "dephasing";
  r.parameters = {{"flux_rad", num(options.flux)},
                  {"trajectories", std::to_string(options.noise.trajectories)},
                  {"fluctuators_per_site", std::to_string(options.noise.fluctuators.size())}};
  r.table.columns = {"t_ns", "coherence_idle", "coherence_driven"};
  for (std::size_t i = 0; i < grid.size(); ++i) r.table.add({grid[i], idle[i], driven[i]});
  r.metrics["final_idle"] = idle.back();
  r.metrics["final_driven"] = driven.back();
  r.manifest = manifest_for(r.name, &dev, "", 0.0, options.noise.seed);
  record_drift(r.manifest, driven_tr);
  r.manifest.wall_ms.emplace_back("total", elapsed_ms(start));
  return r;
}

}  // namespace chiralsim
