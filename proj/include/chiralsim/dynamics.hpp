// Propagators: fixed-step RK4 with a dt/2 verification pass, Lindblad
// evolution, and classical-noise trajectory ensembles.

#pragma once

#include "chiralsim/fock.hpp"
#include "chiralsim/hamiltonian.hpp"
#include "chiralsim/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace chiralsim {

struct PropagatorConfig {
  double dt_ns = 1.0;
  /// Largest allowed change of final basis populations between dt and dt/2.
  double tolerance = 1e-5;
  bool verify = true;
  /// Upper bound on dt * max|H entry| of the integrated generator.
  double max_step_phase = 0.1;
};

inline constexpr double kLabDt = 0.1;
inline constexpr double kEffectiveDt = 1.0;

/// Time-dependent generator in its integration picture.
///
/// States are integrated as psi_I and reported as exp(-i diag(frame) t) psi_I.
/// The lab Hamiltonian uses the interaction picture of its static diagonal;
/// rotating-frame generators have an empty frame.
struct Generator {
  FockBasis basis;
  std::function<CMatrix(double)> matrix;
  RVector frame;
  bool time_dependent = true;

  static Generator constant(FockBasis basis, CMatrix h);
  static Generator lab(const LabHamiltonian& h);
  static Generator effective(const EffectiveHamiltonian& h);

  bool has_frame() const { return frame.size() > 0; }
  CVector report(const CVector& psi, double t) const;
  CMatrix report(const CMatrix& rho, double t) const;
  CVector integrate_form(const CVector& psi, double t) const;
  CMatrix integrate_form(const CMatrix& rho, double t) const;
};

struct Trajectory {
  FockBasis basis;
  std::vector<double> times;
  std::vector<CVector> states;
  std::vector<CMatrix> rhos;
  std::string method;
  double dt_ns = 0.0;
  double norm_drift = 0.0;       // max |<psi|psi> - 1| or |tr rho - 1|
  double min_eigenvalue = 0.0;   // density-matrix runs only
  double verify_deviation = 0.0; // dt vs dt/2 final populations

  bool mixed() const { return !rhos.empty(); }
  std::size_t size() const { return times.size(); }
  CMatrix density(std::size_t i) const;
};

/// Uniform grid t0, t0 + step, ..., covering [t0, t1] (t1 included when commensurate).
std::vector<double> time_grid(double t0, double t1, double step);

Trajectory evolve_unitary(const Generator& h, const CVector& psi0, const std::vector<double>& grid,
                          const PropagatorConfig& config = {});

/// Collapse operators given in the Schroedinger picture of the generator's basis.
struct NoiseChannel {
  std::vector<std::optional<double>> t1_us;
  std::vector<std::optional<double>> tphi_us;

  static NoiseChannel from_device(const DeviceSpec& device);
  std::vector<CMatrix> collapse_operators(const FockBasis& basis) const;
};

Trajectory evolve_lindblad(const Generator& h, const CMatrix& rho0, const NoiseChannel& channels,
                           const std::vector<double>& grid, const PropagatorConfig& config = {});

/// One random telegraph process switching between +amplitude and -amplitude.
struct Fluctuator {
  double rate = 0.0;       // switches per ns
  double amplitude = 0.0;  // rad/ns
};

struct ClassicalNoiseSpec {
  /// Fluctuators acting on every site (independently drawn per site).
  std::vector<Fluctuator> fluctuators;
  int trajectories = 64;
  std::uint64_t seed = 1;

  /// Log-spaced switching rates, `per_decade` per decade in [rate_min, rate_max],
  /// equal amplitudes with total rms `sigma` (rad/ns).
  static ClassicalNoiseSpec one_over_f(double rate_min, double rate_max, int per_decade,
                                       double sigma, int trajectories, std::uint64_t seed);
};

/// Deterministic stream for trajectory `index` of a run seeded with `master`.
class NoiseRng {
 public:
  NoiseRng(std::uint64_t master, std::uint64_t index);
  /// Uniform on [0, 1) from the top 53 bits.
  double uniform();
  double exponential(double rate);
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Piecewise-constant per-site frequency shift for one trajectory.
class TelegraphRealization {
 public:
  TelegraphRealization(const ClassicalNoiseSpec& spec, int num_sites, double t_end, NoiseRng& rng);
  /// Frequency shift of a site at time t.
  double shift(int site, double t) const;
  /// All switch times, sorted.
  std::vector<double> breakpoints() const;

 private:
  struct Track {
    std::vector<double> switches;
    double initial = 0.0;
  };
  std::vector<std::vector<Track>> sites_;
};

/// Ensemble-averaged density matrices of pure trajectories with
/// H(t) + sum_j delta_j(t) n_j. Block-partitioned reduction, independent of
/// the worker count.
Trajectory evolve_noisy_ensemble(const Generator& h, const CVector& psi0,
                                 const ClassicalNoiseSpec& noise, const std::vector<double>& grid,
                                 const PropagatorConfig& config = {});

/// Apply the frame map to every stored state.
Trajectory to_rotating_frame(const Trajectory& lab, const FrameMap& frame);

/// Worker count: CHIRALSIM_THREADS if set, else hardware concurrency.
int worker_count();
/// Run fn(i) for i in [0, n) across workers. Exceptions propagate (first by index).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace chiralsim
