// Expectation values: occupations, bond and chiral currents, chirality,
// Pauli correlators, purity, fidelity, energy, and the continuity check.
//
// Signed quantities refer to the loop orientation 1 -> 2 -> 3 -> 1 (sites
// 0 -> 1 -> 2 -> 0 internally). Pauli operators follow sigma^- = a, i.e.
// X = a + a^dagger, Y = i(a - a^dagger), Z = 2n - 1.

#pragma once

#include "chiralsim/device.hpp"
#include "chiralsim/dynamics.hpp"
#include "chiralsim/fock.hpp"
#include "chiralsim/hamiltonian.hpp"
#include "chiralsim/types.hpp"

#include <array>
#include <vector>

namespace chiralsim {

inline double expectation(const CMatrix& op, const CVector& psi) { return psi.dot(op * psi).real(); }
inline double expectation(const CMatrix& op, const CMatrix& rho) { return (op * rho).trace().real(); }

struct OccupationPair {
  double mean = 0.0;         // <n_j>
  double probability = 0.0;  // P(n_j >= 1)
};

template <typename State>
OccupationPair occupation(const FockBasis& basis, const State& state, int site) {
  auto occupied = number_function(basis, site, [](int n) { return n >= 1 ? 1.0 : 0.0; });
  return {expectation(number_op(basis, site), state), expectation(occupied, state)};
}

/// I_jk = i(e^{i phase} a_j^dagger a_k - h.c.); positive when flowing j -> k.
CMatrix bond_current_op(const FockBasis& basis, int j, int k, double phase);

template <typename State>
double bond_current(const FockBasis& basis, const State& state, int j, int k, double phase) {
  return expectation(bond_current_op(basis, j, k, phase), state);
}

/// Directed loop 0 -> 1 -> ... -> N-1 -> 0 with each step's phase taken from
/// the device link (negated when the link is stored reversed).
std::vector<std::array<int, 2>> loop_links(const DeviceSpec& device);
double loop_phase(const DeviceSpec& device, int a, int b);

/// Sum of bond currents around the directed loop.
CMatrix chiral_current_op(const FockBasis& basis, const DeviceSpec& device);

template <typename State>
double chiral_current(const FockBasis& basis, const State& state, const DeviceSpec& device) {
  return expectation(chiral_current_op(basis, device), state);
}

enum class PauliAxis { X, Y, Z };

/// Single-site Pauli operator on the unrestricted two-level basis.
CMatrix pauli(const FockBasis& basis, int site, PauliAxis axis);

/// Density matrix on FockBasis(N, 2) together with the weight kept.
struct QubitState {
  FockBasis basis;
  CMatrix rho;
  double weight = 1.0;
};

/// Restrict to the two-lowest-level subspace of every site, embedding
/// sector bases and renormalizing truncated d >= 3 states.
QubitState qubit_projection(const FockBasis& basis, const CMatrix& rho);

double pauli_correlator(const FockBasis& basis, const CMatrix& rho, std::array<int, 2> sites,
                        std::array<PauliAxis, 2> axes);

/// cos(phi)(<X_j Y_k> - <Y_j X_k>)/2 - sin(phi)(<X_j X_k> + <Y_j Y_k>)/2.
double current_from_correlators(const FockBasis& basis, const CMatrix& rho, int j, int k, double phase);

/// chi = sigma_1 . (sigma_2 x sigma_3) on FockBasis(3, 2).
CMatrix chirality_op(const FockBasis& qubits);

struct ChiralityValue {
  double value = 0.0;
  double weight = 1.0;
};

/// Three-site chirality. Needs a two-level truncation unless `project` is set,
/// in which case d >= 3 states are projected and the kept weight reported.
ChiralityValue chirality(const FockBasis& basis, const CMatrix& rho, bool project = false);

template <typename Derived>
double purity(const Eigen::MatrixBase<Derived>& rho) {
  return (rho * rho).trace().real();
}

inline double fidelity(const CVector& psi, const CVector& phi) { return std::norm(psi.dot(phi)); }
inline double fidelity(const CVector& psi, const CMatrix& rho) { return psi.dot(rho * psi).real(); }

template <typename State>
double energy(const CMatrix& h, const State& state) {
  return expectation(h, state);
}

inline double energy_variance(const CMatrix& h, const CVector& psi) {
  double e = expectation(h, psi);
  return expectation(h * h, psi) - e * e;
}

/// Max |d<n_j>/dt - (inflow - outflow)| over interior samples and sites,
/// using centered differences on the trajectory grid and the hop terms of the
/// generating effective Hamiltonian.
double continuity_check(const Trajectory& trajectory, const std::vector<HopTerm>& hops);

}  // namespace chiralsim
