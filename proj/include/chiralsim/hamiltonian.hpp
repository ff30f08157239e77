// Lab-frame and rotating-frame Hamiltonians of modulated-coupler devices.

#pragma once

#include "chiralsim/device.hpp"
#include "chiralsim/fock.hpp"
#include "chiralsim/types.hpp"

#include <string>
#include <vector>

namespace chiralsim {

/// Coupler drive in angular units (rad/ns).
///
/// `frequency` is the modulation frequency signed as (omega_k - omega_j) so
/// that a matched drive produces the hop e^{i phase} a_j^dagger a_k in the
/// rotating frame. Zero frequency marks a resonant (statically held) link.
struct LinkDrive {
  int j = 0;
  int k = 1;
  double g0 = 0.0;
  double gdc = 0.0;
  double frequency = 0.0;
  double phase = 0.0;

  double coupling(double t) const;
};

std::vector<LinkDrive> link_drives(const DeviceSpec& device);

/// On-site energy sum_j omega_j n_j plus the anharmonic interaction
/// -U2/2 n(n-1) + U3/6 n(n-1)(n-2), without the zero-point offset.
RVector static_energies(const DeviceSpec& device, const FockBasis& basis);

/// H(t) = sum omega_j n_j + sum g_jk(t)(a_j^dagger a_k + h.c.) + H_int.
class LabHamiltonian {
 public:
  LabHamiltonian(const DeviceSpec& device, FockBasis basis);

  const FockBasis& basis() const { return basis_; }
  const RVector& static_diagonal() const { return diag_; }
  const std::vector<LinkDrive>& drives() const { return drives_; }

  /// Schroedinger-picture H(t).
  CMatrix operator()(double t) const;
  /// Coupling part in the interaction picture of the static diagonal:
  /// e^{i H0 t} (H(t) - H0) e^{-i H0 t}. Same dynamics, no GHz phase winding.
  CMatrix interaction(double t) const;

 private:
  FockBasis basis_;
  RVector diag_;
  std::vector<LinkDrive> drives_;
  std::vector<CMatrix> templates_;
};

/// Per-site rotation frequencies; psi_rot = exp(i sum nu_j n_j t) psi_lab.
struct FrameMap {
  std::vector<double> frequencies;

  CVector apply(const FockBasis& basis, const CVector& state, double t) const;
  CMatrix apply(const FockBasis& basis, const CMatrix& rho, double t) const;
};

/// One hopping term J (e^{i phase} a_j^dagger a_k + h.c.).
struct HopTerm {
  int j = 0;
  int k = 1;
  double amplitude = 0.0;
  double phase = 0.0;
};

struct EffectiveHamiltonian {
  FockBasis basis;
  CMatrix matrix;
  std::vector<HopTerm> hops;
  std::vector<double> detunings;  // rad/ns, per site
  FrameMap frame;
  double flux = 0.0;  // flux of the first independent loop (0 without loops)
  std::vector<std::string> warnings;
};

/// Assemble sum_links J (e^{i phi} a_j^dagger a_k + h.c.) + detunings + interaction.
CMatrix hopping_matrix(const FockBasis& basis, const std::vector<HopTerm>& hops);

/// Rotating-frame Hamiltonian with J = g0 / 2 per modulated link.
EffectiveHamiltonian build_effective(const DeviceSpec& device, const FockBasis& basis);
/// Hard-core (two-level) sector with the given excitation number.
EffectiveHamiltonian build_effective(const DeviceSpec& device, int sector);

/// Loop flux of the first fundamental cycle (0 for trees).
double device_flux(const DeviceSpec& device);
/// Copy with the first loop's flux set by adjusting its last link's phase.
DeviceSpec with_loop_flux(const DeviceSpec& device, double flux);

}  // namespace chiralsim
