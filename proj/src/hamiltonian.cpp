#include "chiralsim/hamiltonian.hpp"

#include "chiralsim/gauge.hpp"

#include <cmath>
#include <deque>

namespace chiralsim {

namespace {

// Residuals below this are treated as exact frequency matching (1 kHz).
constexpr double kExactMatch = units::mhz(1e-3);

}  // namespace

double LinkDrive::coupling(double t) const {
  if (frequency == 0.0) return gdc + 0.5 * g0 * std::cos(phase);
  return gdc + g0 * std::cos(frequency * t + phase);
}

std::vector<LinkDrive> link_drives(const DeviceSpec& device) {
  std::vector<LinkDrive> out;
  for (const auto& l : device.links) {
    LinkDrive d;
    d.j = l.j;
    d.k = l.k;
    d.g0 = units::mhz(l.g0_mhz);
    d.gdc = units::mhz(l.gdc_mhz);
    d.phase = l.phi_rad;
    double split = units::ghz(device.sites[static_cast<std::size_t>(l.k)].omega_ghz) -
                   units::ghz(device.sites[static_cast<std::size_t>(l.j)].omega_ghz);
    double mag = units::mhz(std::abs(l.delta_mhz));
    if (l.delta_mhz == 0.0) {
      d.frequency = 0.0;
    } else if (std::abs(split) > 0.0) {
      d.frequency = std::copysign(mag, split);
    } else {
      d.frequency = units::mhz(l.delta_mhz);
    }
    out.push_back(d);
  }
  return out;
}

RVector static_energies(const DeviceSpec& device, const FockBasis& basis) {
  if (basis.num_sites() != device.num_sites()) throw ConfigError("basis/device site count mismatch");
  RVector e = RVector::Zero(basis.dim());
  for (Eigen::Index i = 0; i < basis.dim(); ++i) {
    double sum = 0.0;
    for (int s = 0; s < basis.num_sites(); ++s) {
      const auto& site = device.sites[static_cast<std::size_t>(s)];
      double n = basis.occupation(i, s);
      sum += units::ghz(site.omega_ghz) * n;
      sum += -0.5 * units::mhz(site.u2_mhz) * n * (n - 1.0);
      sum += units::mhz(site.u3_mhz) / 6.0 * n * (n - 1.0) * (n - 2.0);
    }
    e(i) = sum;
  }
  return e;
}

LabHamiltonian::LabHamiltonian(const DeviceSpec& device, FockBasis basis)
    : basis_(std::move(basis)), diag_(static_energies(device, basis_)), drives_(link_drives(device)) {
  for (const auto& d : drives_) templates_.push_back(hop(basis_, d.j, d.k, 0.0));
}

CMatrix LabHamiltonian::operator()(double t) const {
  CMatrix h = diag_.cast<Complex>().asDiagonal();
  for (std::size_t i = 0; i < drives_.size(); ++i) h += drives_[i].coupling(t) * templates_[i];
  return h;
}

CMatrix LabHamiltonian::interaction(double t) const {
  CMatrix k = CMatrix::Zero(basis_.dim(), basis_.dim());
  for (std::size_t i = 0; i < drives_.size(); ++i) k += drives_[i].coupling(t) * templates_[i];
  CVector rot(basis_.dim());
  for (Eigen::Index a = 0; a < basis_.dim(); ++a) rot(a) = std::polar(1.0, diag_(a) * t);
  return rot.asDiagonal() * k * rot.conjugate().asDiagonal();
}

CVector FrameMap::apply(const FockBasis& basis, const CVector& state, double t) const {
  CVector out = state;
  for (Eigen::Index a = 0; a < basis.dim(); ++a) {
    double angle = 0.0;
    for (int s = 0; s < basis.num_sites(); ++s) angle += frequencies[static_cast<std::size_t>(s)] * basis.occupation(a, s);
    out(a) *= std::polar(1.0, angle * t);
  }
  return out;
}

CMatrix FrameMap::apply(const FockBasis& basis, const CMatrix& rho, double t) const {
  CVector phases(basis.dim());
  for (Eigen::Index a = 0; a < basis.dim(); ++a) {
    double angle = 0.0;
    for (int s = 0; s < basis.num_sites(); ++s) angle += frequencies[static_cast<std::size_t>(s)] * basis.occupation(a, s);
    phases(a) = std::polar(1.0, angle * t);
  }
  return phases.asDiagonal() * rho * phases.conjugate().asDiagonal();
}

CMatrix hopping_matrix(const FockBasis& basis, const std::vector<HopTerm>& hops) {
  CMatrix h = CMatrix::Zero(basis.dim(), basis.dim());
  for (const auto& t : hops) h += t.amplitude * hop(basis, t.j, t.k, t.phase);
  return h;
}

EffectiveHamiltonian build_effective(const DeviceSpec& device, const FockBasis& basis) {
  if (basis.num_sites() != device.num_sites()) throw ConfigError("basis/device site count mismatch");
  auto drives = link_drives(device);
  const int n = device.num_sites();

  // Frame frequencies: grow over links from site 0 so every tree link is resonant.
  std::vector<double> nu(static_cast<std::size_t>(n), 0.0);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<std::string> warnings;
  for (int root = 0; root < n; ++root) {
    if (seen[static_cast<std::size_t>(root)]) continue;
    seen[static_cast<std::size_t>(root)] = true;
    nu[static_cast<std::size_t>(root)] = units::ghz(device.sites[static_cast<std::size_t>(root)].omega_ghz);
    std::deque<int> queue{root};
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int v = 0; v < n; ++v) {
        if (seen[static_cast<std::size_t>(v)]) continue;
        for (const auto& d : drives) {
          if ((d.j == u && d.k == v) || (d.j == v && d.k == u)) {
            double shift = d.g0 != 0.0 ? d.frequency : 0.0;
            // nu_k - nu_j = frequency for a drive stored (j, k).
            nu[static_cast<std::size_t>(v)] = nu[static_cast<std::size_t>(u)] + (d.j == u ? shift : -shift);
            seen[static_cast<std::size_t>(v)] = true;
            queue.push_back(v);
            break;
          }
        }
      }
    }
  }

  EffectiveHamiltonian eff{basis, CMatrix::Zero(basis.dim(), basis.dim()), {}, {}, FrameMap{nu}, 0.0, {}};
  for (int s = 0; s < n; ++s) {
    double det = units::ghz(device.sites[static_cast<std::size_t>(s)].omega_ghz) - nu[static_cast<std::size_t>(s)];
    if (std::abs(det) <= kExactMatch) det = 0.0;
    eff.detunings.push_back(det);
  }
  for (const auto& d : drives) {
    double shift = d.g0 != 0.0 ? d.frequency : 0.0;
    double mismatch = (nu[static_cast<std::size_t>(d.k)] - nu[static_cast<std::size_t>(d.j)]) - shift;
    if (std::abs(mismatch) > kExactMatch) {
      warnings.push_back("link (" + std::to_string(d.j + 1) + "," + std::to_string(d.k + 1) +
                         ") is off-resonant in the rotating frame; its hop is dropped");
      continue;
    }
    double amplitude = 0.5 * d.g0;
    if (d.frequency == 0.0) {
      // Static part survives only on frame-resonant links.
      if (d.gdc != 0.0) eff.hops.push_back(HopTerm{d.j, d.k, d.gdc, 0.0});
    }
    if (amplitude != 0.0) eff.hops.push_back(HopTerm{d.j, d.k, amplitude, d.phase});
  }

  eff.matrix = hopping_matrix(basis, eff.hops);
  for (Eigen::Index a = 0; a < basis.dim(); ++a) {
    double diag = 0.0;
    for (int s = 0; s < n; ++s) {
      const auto& site = device.sites[static_cast<std::size_t>(s)];
      double occ = basis.occupation(a, s);
      diag += eff.detunings[static_cast<std::size_t>(s)] * occ;
      diag += -0.5 * units::mhz(site.u2_mhz) * occ * (occ - 1.0);
      diag += units::mhz(site.u3_mhz) / 6.0 * occ * (occ - 1.0) * (occ - 2.0);
    }
    eff.matrix(a, a) += diag;
  }
  eff.flux = device_flux(device);
  eff.warnings = std::move(warnings);
  return eff;
}

EffectiveHamiltonian build_effective(const DeviceSpec& device, int sector) {
  return build_effective(device, FockBasis(device.num_sites(), 2, sector));
}

double device_flux(const DeviceSpec& device) {
  auto graph = LinkGraph::from_device(device);
  auto cycles = fundamental_cycles(graph);
  if (cycles.empty()) return 0.0;
  return loop_flux(graph, device.link_phases(), cycles.front());
}

DeviceSpec with_loop_flux(const DeviceSpec& device, double flux) {
  auto graph = LinkGraph::from_device(device);
  auto cycles = fundamental_cycles(graph);
  if (cycles.empty()) throw ConfigError("device has no closed loop to thread flux through");
  const auto& c = cycles.front();
  int last = -1, sign = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto [idx, s] = graph.find(c[i], c[(i + 1) % c.size()]);
    if (idx > last) {
      last = idx;
      sign = s;
    }
  }
  auto phases = device.link_phases();
  double current = loop_flux(graph, phases, c);
  phases[static_cast<std::size_t>(last)] += sign * (flux - current);
  return device.with_phases(phases);
}

}  // namespace chiralsim
