// Named protocols on modulated-coupler devices. Each returns an
// ExperimentResult whose table schema is fixed per experiment.

#pragma once

#include "chiralsim/device.hpp"
#include "chiralsim/dynamics.hpp"
#include "chiralsim/hamiltonian.hpp"
#include "chiralsim/result.hpp"
#include "chiralsim/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chiralsim {

enum class Frame { Lab, Effective };

Frame parse_frame(const std::string& text);
std::string to_string(Frame frame);

/// Hex FNV-1a of the serialized device.
std::string config_hash(const DeviceSpec& device);

/// Unitary occupation run shared by the circulation-type experiments.
struct OccupationRun {
  FockBasis basis;
  Trajectory trajectory;
  std::vector<std::string> warnings;
  std::vector<HopTerm> hops;  // effective frame only
};

/// Evolve the one-/two-hot state `initial` at loop flux `flux`. Effective
/// frame uses the hard-core sector at d = 2; lab frame integrates H(t) in the
/// fixed-number sector at `levels` levels per site.
OccupationRun simulate_occupations(const DeviceSpec& device, double flux, Frame frame,
                                   const std::vector<int>& initial, const std::vector<double>& grid,
                                   std::optional<double> dt_ns = std::nullopt, int levels = 0);

/// P(n_j >= 1) traces, one vector per site.
std::vector<std::vector<double>> occupation_traces(const Trajectory& trajectory);

struct CirculationOptions {
  double flux = 0.0;
  Frame frame = Frame::Effective;
  double duration_ns = 600.0;
  double sample_ns = 1.0;
  std::optional<double> dt_ns;
  int levels = 0;  // lab frame; 0 takes the device setting
  bool detect_period = true;
  double detection_ns = 3000.0;
  bool mean_occupation = false;
  std::vector<int> initial;  // empty: experiment default
};

/// Photon circulation from |100>. Columns: t_ns, p_q*, [n_q*], and in the
/// effective frame i_12, i_23, i_31, i_chiral.
ExperimentResult run_circulation(const DeviceSpec& device, const CirculationOptions& options);

/// Two photons from |110>; photon and vacancy (v_q*) traces.
ExperimentResult run_two_photon(const DeviceSpec& device, const CirculationOptions& options);

enum class ChevronMode { Static, Parametric };

struct ChevronOptions {
  ChevronMode mode = ChevronMode::Static;
  std::vector<double> detunings_mhz;
  double duration_ns = 400.0;
  double sample_ns = 1.0;
  double dt_ns = kLabDt;
  double g_mhz = 0.0;  // 0: 2 MHz static, 4 MHz parametric
  double base_omega_ghz = 5.8;
  double parametric_split_mhz = 35.0;
};

/// Two-site lab-frame chevron. Columns: sweep_mhz, detuning_mhz, t_ns, p_q1.
ExperimentResult run_chevron(const ChevronOptions& options);

enum class RampShape { Linear, Cosine };

/// Coupling ramp 0 -> g0 over `duration_ns` with a symmetry-breaking on-site
/// bias eps_j = bias (2j/(N-1) - 1) that ramps to zero alongside.
struct RampSchedule {
  double duration_ns = 400.0;
  RampShape shape = RampShape::Linear;
  double bias_mhz = 10.0;

  double progress(double t) const;
};

struct AdiabaticOptions {
  std::vector<double> flux_grid;
  RampSchedule schedule;
  int manifold = 1;
  double dt_ns = kEffectiveDt;
};

/// Columns: flux_rad, i_chiral, i_chiral_ref, fidelity, gap_mhz.
ExperimentResult run_adiabatic(const DeviceSpec& device, const AdiabaticOptions& options);

/// Ground-cluster averaged chiral current of the hard-core manifold at `flux`.
double ground_state_current(const DeviceSpec& device, double flux, int manifold);

/// Final state of the ramp together with its ground-space fidelity.
struct RampOutcome {
  CVector state;
  double fidelity = 0.0;
  double chiral_current = 0.0;
};
RampOutcome ramp_to_ground(const DeviceSpec& device, double flux, int manifold, const RampSchedule& schedule,
                           double dt_ns = kEffectiveDt);

struct DarkonOptions {
  double flux = kPi / 2.0;
  std::vector<double> alphas;
  double duration_ns = 600.0;
  double sample_ns = 1.0;
};

/// psi0 = cos a |100> + sin a |011> on the full two-level space.
/// Columns: alpha_rad, t_ns, p_q1..p_q3.
ExperimentResult run_darkon(const DeviceSpec& device, const DarkonOptions& options);

struct EigenPrepOptions {
  std::vector<int> manifolds = {1, 2};
  std::vector<int> momenta = {0, 1, 2};
  double scan_step_ns = 0.5;
  double scan_limit_ns = 1000.0;
};

/// Equal-population evolution under uniform real coupling followed by
/// per-qubit phases. Columns: manifold, momentum, t_star_ns, energy_mhz,
/// variance_mhz2, exact_energy_mhz.
ExperimentResult run_eigenstate_prep(const DeviceSpec& device, const EigenPrepOptions& options = {});

struct EntanglementOptions {
  double flux = kPi / 2.0;
  double duration_ns = 600.0;
  double sample_ns = 1.0;
  std::vector<int> initial = {0, 0, 1};
  double epsilon = 1e-3;
};

/// Columns: t_ns, p_q*, purity_q*, disentangled.
ExperimentResult run_entanglement(const DeviceSpec& device, const EntanglementOptions& options);

struct FitOptions {
  double lo_mhz = 3.0;
  double hi_mhz = 5.0;
  int scan_points = 21;
  double tolerance_mhz = 1e-5;
  std::optional<double> flux;
  Frame frame = Frame::Effective;
};

struct FitResult {
  double g0_mhz = 0.0;
  double residual = 0.0;
  std::vector<std::pair<double, double>> curve;  // (g0_mhz, residual) of the scan
  std::vector<std::string> warnings;
};

/// Least-squares g0 from observed t_ns, p_q* columns against the template
/// device evolved from |100>.
FitResult fit_g0(const Table& observed, const DeviceSpec& device, const FitOptions& options = {});
ExperimentResult fit_result(const FitResult& fit, const DeviceSpec& device);

struct TrsResult {
  double period_ns = 0.0;
  double metric = 0.0;
};

/// D = max_{j,t} |P_j(t) - P_j(T - t)| over one detected period.
TrsResult trs_metric(const DeviceSpec& device, double flux, int samples = 400, double detection_ns = 3000.0);

/// Hard-core spectra over the grid. Columns: flux_rad, manifold, band_index,
/// energy_mhz, gap_mhz.
ExperimentResult run_spectrum(const DeviceSpec& device, const std::vector<double>& grid,
                              const std::vector<int>& manifolds = {1, 2});

/// Phases realizing the targets on the fundamental cycles. Columns:
/// link, site_j, site_k, phi_rad.
ExperimentResult run_compile_flux(const DeviceSpec& device, const std::vector<double>& targets);

struct DecoherenceOptions {
  double flux = kPi / 2.0;
  double duration_ns = 600.0;
  double sample_ns = 1.0;
  double t1_us = 10.0;
};

/// Lindblad (T1 on every site) against unitary evolution from |100>.
/// Columns: t_ns, p_q* (Lindblad), u_q* (unitary), n_total.
ExperimentResult run_lindblad_envelope(const DeviceSpec& device, const DecoherenceOptions& options);

struct DephasingOptions {
  double flux = kPi / 2.0;
  double duration_ns = 600.0;
  double sample_ns = 1.0;
  ClassicalNoiseSpec noise = ClassicalNoiseSpec::one_over_f(1e-4, 1e-1, 5, units::mhz(0.5), 256, 7);
};

/// Ramsey-type coherence of (|000> + |100>)/sqrt2 under classical noise, idle
/// against continuously coupled. Columns: t_ns, coherence_idle, coherence_driven.
ExperimentResult run_dephasing(const DeviceSpec& device, const DephasingOptions& options);

}  // namespace chiralsim
