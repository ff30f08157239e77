#include "chiralsim/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

namespace chiralsim {

namespace {

constexpr double kNormLimit = 1e-6;
constexpr double kPositivityFloor = -1e-6;

template <typename MatrixFn>
void rk4_step(const MatrixFn& h, CVector& psi, double t, double step) {
  const Complex f = -kI;
  CMatrix hm = h(t + 0.5 * step);
  CVector k1 = f * (h(t) * psi);
  CVector k2 = f * (hm * (psi + 0.5 * step * k1));
  CVector k3 = f * (hm * (psi + 0.5 * step * k2));
  CVector k4 = f * (h(t + step) * (psi + step * k3));
  psi += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename RhsFn>
void rk4_step_rho(const RhsFn& rhs, CMatrix& rho, double t, double step) {
  CMatrix k1 = rhs(t, rho);
  CMatrix k2 = rhs(t + 0.5 * step, rho + 0.5 * step * k1);
  CMatrix k3 = rhs(t + 0.5 * step, rho + 0.5 * step * k2);
  CMatrix k4 = rhs(t + step, rho + step * k3);
  rho += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

int substeps(double span, double dt) {
  return std::max(1, static_cast<int>(std::ceil(span / dt - 1e-9)));
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("time grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("time grid must be strictly increasing");
  }
}

void check_step(const Generator& h, const std::vector<double>& grid, const PropagatorConfig& config) {
  if (!(config.dt_ns > 0.0)) throw ConfigError("dt must be positive");
  double worst = 0.0;
  const int samples = h.time_dependent ? 16 : 1;
  for (int s = 0; s < samples; ++s) {
    double t = grid.front() + (grid.back() - grid.front()) * s / std::max(1, samples - 1);
    worst = std::max(worst, h.matrix(t).cwiseAbs().maxCoeff());
  }
  if (config.dt_ns * worst >= config.max_step_phase) {
    throw ConfigError("dt = " + std::to_string(config.dt_ns) + " ns does not resolve the generator (dt*max|H| = " +
                      std::to_string(config.dt_ns * worst) + ")");
  }
}

RVector populations(const CVector& psi) { return psi.cwiseAbs2(); }
RVector populations(const CMatrix& rho) { return rho.diagonal().real(); }

double min_hermitian_eigenvalue(const CMatrix& rho) {
  CMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

// Integrate psi (integration picture) across the grid with step dt.
std::vector<CVector> integrate_states(const Generator& h, CVector psi, const std::vector<double>& grid,
                                      double dt) {
  std::vector<CVector> out;
  out.reserve(grid.size());
  out.push_back(psi);
  CMatrix fixed;
  if (!h.time_dependent) fixed = h.matrix(grid.front());
  auto constant = [&](double) -> const CMatrix& { return fixed; };
  for (std::size_t i = 1; i < grid.size(); ++i) {
    int n = substeps(grid[i] - grid[i - 1], dt);
    double step = (grid[i] - grid[i - 1]) / n;
    for (int s = 0; s < n; ++s) {
      double t = grid[i - 1] + s * step;
      if (h.time_dependent) {
        rk4_step(h.matrix, psi, t, step);
      } else {
        rk4_step(constant, psi, t, step);
      }
    }
    out.push_back(psi);
  }
  return out;
}

}  // namespace

Generator Generator::constant(FockBasis basis, CMatrix h) {
  Generator g{std::move(basis), {}, RVector(), false};
  g.matrix = [m = std::move(h)](double) { return m; };
  return g;
}

Generator Generator::lab(const LabHamiltonian& h) {
  Generator g{h.basis(), {}, h.static_diagonal(), true};
  g.matrix = [h](double t) { return h.interaction(t); };
  return g;
}

Generator Generator::effective(const EffectiveHamiltonian& h) { return constant(h.basis, h.matrix); }

CVector Generator::report(const CVector& psi, double t) const {
  if (!has_frame()) return psi;
  CVector phases = (frame.cast<Complex>() * (-kI * t)).array().exp();
  return phases.cwiseProduct(psi);
}

CMatrix Generator::report(const CMatrix& rho, double t) const {
  if (!has_frame()) return rho;
  CVector phases = (frame.cast<Complex>() * (-kI * t)).array().exp();
  return phases.asDiagonal() * rho * phases.conjugate().asDiagonal();
}

CVector Generator::integrate_form(const CVector& psi, double t) const { return report(psi, -t); }
CMatrix Generator::integrate_form(const CMatrix& rho, double t) const { return report(rho, -t); }

CMatrix Trajectory::density(std::size_t i) const {
  if (mixed()) return rhos[i];
  return states[i] * states[i].adjoint();
}

std::vector<double> time_grid(double t0, double t1, double step) {
  if (!(step > 0.0) || t1 < t0) throw ConfigError("invalid time grid");
  std::vector<double> out;
  auto n = static_cast<long>(std::floor((t1 - t0) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(t0 + static_cast<double>(i) * step);
  return out;
}

Trajectory evolve_unitary(const Generator& h, const CVector& psi0, const std::vector<double>& grid,
                          const PropagatorConfig& config) {
  check_grid(grid);
  if (psi0.size() != h.basis.dim()) throw ConfigError("initial state does not match the basis");
  if (std::abs(psi0.norm() - 1.0) > 1e-9) throw ConfigError("initial state is not normalized");
  check_step(h, grid, config);

  CVector start = h.integrate_form(psi0, grid.front());
  auto states = integrate_states(h, start, grid, config.dt_ns);

  Trajectory tr{h.basis, grid, {}, {}, "rk4", config.dt_ns, 0.0, 0.0, 0.0};
  if (config.verify) {
    auto fine = integrate_states(h, start, {grid.front(), grid.back()}, 0.5 * config.dt_ns);
    tr.verify_deviation = (populations(fine.back()) - populations(states.back())).cwiseAbs().maxCoeff();
    tr.method = "rk4+halving";
    if (tr.verify_deviation > config.tolerance) {
      throw NumericalError("step-halving check failed: final populations moved by " +
                           std::to_string(tr.verify_deviation) + " (tolerance " +
                           std::to_string(config.tolerance) + ") at dt = " + std::to_string(config.dt_ns) +
                           " ns");
    }
  }
  tr.states.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    tr.norm_drift = std::max(tr.norm_drift, std::abs(states[i].squaredNorm() - 1.0));
    tr.states.push_back(h.report(states[i], grid[i]));
  }
  if (tr.norm_drift > kNormLimit) {
    throw NumericalError("norm drift " + std::to_string(tr.norm_drift) + " exceeds 1e-6");
  }
  return tr;
}

NoiseChannel NoiseChannel::from_device(const DeviceSpec& device) {
  NoiseChannel ch;
  for (const auto& s : device.sites) {
    ch.t1_us.push_back(s.t1_us);
    ch.tphi_us.push_back(s.tphi_us);
  }
  return ch;
}

std::vector<CMatrix> NoiseChannel::collapse_operators(const FockBasis& basis) const {
  std::vector<CMatrix> ops;
  for (int s = 0; s < basis.num_sites(); ++s) {
    auto idx = static_cast<std::size_t>(s);
    if (idx < t1_us.size() && t1_us[idx]) {
      if (!(*t1_us[idx] > 0.0)) throw ConfigError("T1 must be positive");
      ops.push_back(std::sqrt(1.0 / units::us(*t1_us[idx])) * ladder(basis, s, LadderKind::Lower));
    }
    if (idx < tphi_us.size() && tphi_us[idx]) {
      if (!(*tphi_us[idx] > 0.0)) throw ConfigError("Tphi must be positive");
      ops.push_back(std::sqrt(2.0 / units::us(*tphi_us[idx])) * number_op(basis, s));
    }
  }
  return ops;
}

namespace {

std::vector<CMatrix> integrate_lindblad(const Generator& h, CMatrix rho, const std::vector<CMatrix>& ops,
                                        const std::vector<double>& grid, double dt) {
  std::vector<CMatrix> decay;
  for (const auto& l : ops) decay.push_back(l.adjoint() * l);
  // Collapse operators in the integration picture pick up e^{i(E_a - E_b)t}.
  auto rotate = [&](const CMatrix& l, double t) -> CMatrix {
    if (!h.has_frame()) return l;
    CVector phases = (h.frame.cast<Complex>() * (kI * t)).array().exp();
    return phases.asDiagonal() * l * phases.conjugate().asDiagonal();
  };
  auto rhs = [&](double t, const CMatrix& r) -> CMatrix {
    CMatrix hm = h.matrix(t);
    CMatrix out = -kI * (hm * r - r * hm);
    for (std::size_t i = 0; i < ops.size(); ++i) {
      CMatrix l = rotate(ops[i], t);
      CMatrix ldl = rotate(decay[i], t);
      out += l * r * l.adjoint() - 0.5 * (ldl * r + r * ldl);
    }
    return out;
  };
  std::vector<CMatrix> out;
  out.reserve(grid.size());
  out.push_back(rho);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    int n = substeps(grid[i] - grid[i - 1], dt);
    double step = (grid[i] - grid[i - 1]) / n;
    for (int s = 0; s < n; ++s) rk4_step_rho(rhs, rho, grid[i - 1] + s * step, step);
    out.push_back(rho);
  }
  return out;
}

}  // namespace

Trajectory evolve_lindblad(const Generator& h, const CMatrix& rho0, const NoiseChannel& channels,
                           const std::vector<double>& grid, const PropagatorConfig& config) {
  check_grid(grid);
  const Eigen::Index dim = h.basis.dim();
  if (rho0.rows() != dim || rho0.cols() != dim) throw ConfigError("initial density matrix does not match the basis");
  if (!is_hermitian(rho0, 1e-9) || std::abs(rho0.trace().real() - 1.0) > 1e-9 ||
      min_hermitian_eigenvalue(rho0) < -1e-9) {
    throw ConfigError("initial density matrix is not a valid state");
  }
  check_step(h, grid, config);
  auto ops = channels.collapse_operators(h.basis);

  CMatrix start = h.integrate_form(rho0, grid.front());
  auto rhos = integrate_lindblad(h, start, ops, grid, config.dt_ns);
  Trajectory tr{h.basis, grid, {}, {}, "lindblad-rk4", config.dt_ns, 0.0, 1.0, 0.0};
  if (config.verify) {
    auto fine = integrate_lindblad(h, start, ops, {grid.front(), grid.back()}, 0.5 * config.dt_ns);
    tr.verify_deviation = (populations(fine.back()) - populations(rhos.back())).cwiseAbs().maxCoeff();
    tr.method = "lindblad-rk4+halving";
    if (tr.verify_deviation > config.tolerance) {
      throw NumericalError("step-halving check failed: final populations moved by " +
                           std::to_string(tr.verify_deviation));
    }
  }
  tr.rhos.reserve(rhos.size());
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    tr.norm_drift = std::max(tr.norm_drift, std::abs(rhos[i].trace().real() - 1.0));
    tr.min_eigenvalue = std::min(tr.min_eigenvalue, min_hermitian_eigenvalue(rhos[i]));
    tr.rhos.push_back(h.report(rhos[i], grid[i]));
  }
  if (tr.norm_drift > kNormLimit) {
    throw NumericalError("trace drift " + std::to_string(tr.norm_drift) + " exceeds 1e-6");
  }
  if (tr.min_eigenvalue < kPositivityFloor) {
    throw NumericalError("density matrix lost positivity (eigenvalue " + std::to_string(tr.min_eigenvalue) + ")");
  }
  return tr;
}

ClassicalNoiseSpec ClassicalNoiseSpec::one_over_f(double rate_min, double rate_max, int per_decade,
                                                  double sigma, int trajectories, std::uint64_t seed) {
  if (!(rate_min > 0.0) || !(rate_max >= rate_min) || per_decade < 1) {
    throw ConfigError("invalid fluctuator rate range");
  }
  if (trajectories < 1) throw ConfigError("trajectory count must be at least 1");
  double decades = std::log10(rate_max / rate_min);
  int count = std::max(1, static_cast<int>(std::lround(decades * per_decade)) + 1);
  ClassicalNoiseSpec spec;
  spec.trajectories = trajectories;
  spec.seed = seed;
  double amplitude = sigma / std::sqrt(static_cast<double>(count));
  for (int i = 0; i < count; ++i) {
    double frac = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    spec.fluctuators.push_back({rate_min * std::pow(10.0, frac * decades), amplitude});
  }
  return spec;
}

NoiseRng::NoiseRng(std::uint64_t master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  engine_.seed(seq);
}

double NoiseRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double NoiseRng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

double NoiseRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

TelegraphRealization::TelegraphRealization(const ClassicalNoiseSpec& spec, int num_sites, double t_end,
                                           NoiseRng& rng) {
  sites_.resize(static_cast<std::size_t>(num_sites));
  for (auto& tracks : sites_) {
    for (const auto& f : spec.fluctuators) {
      Track tr;
      tr.initial = rng.uniform() < 0.5 ? f.amplitude : -f.amplitude;
      if (f.rate > 0.0) {
        for (double t = rng.exponential(f.rate); t < t_end; t += rng.exponential(f.rate)) {
          tr.switches.push_back(t);
        }
      }
      tracks.push_back(std::move(tr));
    }
  }
}

std::vector<double> TelegraphRealization::breakpoints() const {
  std::vector<double> out;
  for (const auto& tracks : sites_) {
    for (const auto& tr : tracks) out.insert(out.end(), tr.switches.begin(), tr.switches.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

double TelegraphRealization::shift(int site, double t) const {
  double sum = 0.0;
  for (const auto& tr : sites_[static_cast<std::size_t>(site)]) {
    auto flips = std::upper_bound(tr.switches.begin(), tr.switches.end(), t) - tr.switches.begin();
    sum += (flips % 2 == 0) ? tr.initial : -tr.initial;
  }
  return sum;
}

namespace {

// One pure trajectory with switch times as integration breakpoints; the
// shift is held at its segment-midpoint value so RK4 never straddles a jump.
std::vector<CVector> noisy_trajectory(const Generator& h, const CVector& start, const TelegraphRealization& noise,
                                      const std::vector<double>& grid, const std::vector<double>& breaks,
                                      double dt) {
  const FockBasis& basis = h.basis;
  RMatrix occ(basis.dim(), basis.num_sites());
  for (Eigen::Index a = 0; a < basis.dim(); ++a) {
    for (int s = 0; s < basis.num_sites(); ++s) occ(a, s) = basis.occupation(a, s);
  }
  std::vector<double> knots = grid;
  knots.insert(knots.end(), breaks.begin(), breaks.end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  std::vector<CVector> out;
  out.reserve(grid.size());
  CVector psi = start;
  out.push_back(psi);
  CMatrix fixed;
  if (!h.time_dependent) fixed = h.matrix(grid.front());
  std::size_t next = 1;
  for (std::size_t i = 1; i < knots.size() && next < grid.size(); ++i) {
    double a = knots[i - 1], b = knots[i];
    RVector shifts(basis.num_sites());
    for (int s = 0; s < basis.num_sites(); ++s) shifts(s) = noise.shift(s, 0.5 * (a + b));
    CVector diag = (occ * shifts).cast<Complex>();
    auto seg = [&](double t) -> CMatrix {
      CMatrix m = h.time_dependent ? h.matrix(t) : fixed;
      m.diagonal() += diag;
      return m;
    };
    int n = substeps(b - a, dt);
    double step = (b - a) / n;
    for (int s = 0; s < n; ++s) rk4_step(seg, psi, a + s * step, step);
    if (b == grid[next]) {
      out.push_back(psi);
      ++next;
    }
  }
  return out;
}

}  // namespace

Trajectory evolve_noisy_ensemble(const Generator& h, const CVector& psi0, const ClassicalNoiseSpec& noise,
                                 const std::vector<double>& grid, const PropagatorConfig& config) {
  check_grid(grid);
  if (noise.trajectories < 1) throw ConfigError("trajectory count must be at least 1");
  if (psi0.size() != h.basis.dim()) throw ConfigError("initial state does not match the basis");
  if (std::abs(psi0.norm() - 1.0) > 1e-9) throw ConfigError("initial state is not normalized");
  check_step(h, grid, config);

  constexpr std::size_t kBlock = 16;
  const auto count = static_cast<std::size_t>(noise.trajectories);
  const std::size_t blocks = (count + kBlock - 1) / kBlock;
  const Eigen::Index dim = h.basis.dim();
  CVector start = h.integrate_form(psi0, grid.front());

  std::vector<std::vector<CMatrix>> partial(blocks);
  std::vector<double> deviation(blocks, 0.0), drift(blocks, 0.0);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<CMatrix> sum(grid.size(), CMatrix::Zero(dim, dim));
    for (std::size_t n = b * kBlock; n < std::min(count, (b + 1) * kBlock); ++n) {
      NoiseRng rng(noise.seed, n);
      TelegraphRealization real(noise, h.basis.num_sites(), grid.back(), rng);
      auto breaks = real.breakpoints();
      auto states = noisy_trajectory(h, start, real, grid, breaks, config.dt_ns);
      if (config.verify && n == b * kBlock) {
        auto fine = noisy_trajectory(h, start, real, grid, breaks, 0.5 * config.dt_ns);
        deviation[b] = (populations(fine.back()) - populations(states.back())).cwiseAbs().maxCoeff();
      }
      for (std::size_t i = 0; i < grid.size(); ++i) {
        drift[b] = std::max(drift[b], std::abs(states[i].squaredNorm() - 1.0));
        CVector psi = h.report(states[i], grid[i]);
        sum[i].noalias() += psi * psi.adjoint();
      }
    }
    partial[b] = std::move(sum);
  });

  Trajectory tr{h.basis, grid, {}, {}, "rk4-ensemble", config.dt_ns, 0.0, 0.0, 0.0};
  tr.rhos.assign(grid.size(), CMatrix::Zero(dim, dim));
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < grid.size(); ++i) tr.rhos[i] += partial[b][i];
    tr.verify_deviation = std::max(tr.verify_deviation, deviation[b]);
    tr.norm_drift = std::max(tr.norm_drift, drift[b]);
  }
  for (auto& rho : tr.rhos) rho /= static_cast<double>(count);
  if (tr.verify_deviation > config.tolerance) {
    throw NumericalError("step-halving check failed in noise ensemble: " + std::to_string(tr.verify_deviation));
  }
  if (tr.norm_drift > kNormLimit) throw NumericalError("norm drift in noise ensemble exceeds 1e-6");
  return tr;
}

Trajectory to_rotating_frame(const Trajectory& lab, const FrameMap& frame) {
  Trajectory out = lab;
  for (std::size_t i = 0; i < out.states.size(); ++i) out.states[i] = frame.apply(out.basis, out.states[i], out.times[i]);
  for (std::size_t i = 0; i < out.rhos.size(); ++i) out.rhos[i] = frame.apply(out.basis, out.rhos[i], out.times[i]);
  return out;
}

int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("CHIRALSIM_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) return std::min(cap, hw);
  }
  return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  auto workers = static_cast<std::size_t>(worker_count());
  workers = std::min(workers, n);
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace chiralsim
