#include "chiralsim/observables.hpp"

#include <string>

namespace chiralsim {

CMatrix bond_current_op(const FockBasis& basis, int j, int k, double phase) {
  CMatrix forward = std::polar(1.0, phase) * bilinear(basis, j, k);
  return kI * (forward - CMatrix(forward.adjoint()));
}

double loop_phase(const DeviceSpec& device, int a, int b) {
  for (const auto& l : device.links) {
    if (l.j == a && l.k == b) return l.phi_rad;
    if (l.j == b && l.k == a) return -l.phi_rad;
  }
  throw ConfigError("loop step (" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ") has no link");
}

std::vector<std::array<int, 2>> loop_links(const DeviceSpec& device) {
  std::vector<std::array<int, 2>> out;
  const int n = device.num_sites();
  for (int a = 0; a < n; ++a) out.push_back({a, (a + 1) % n});
  return out;
}

CMatrix chiral_current_op(const FockBasis& basis, const DeviceSpec& device) {
  CMatrix out = CMatrix::Zero(basis.dim(), basis.dim());
  for (auto [a, b] : loop_links(device)) out += bond_current_op(basis, a, b, loop_phase(device, a, b));
  return out;
}

CMatrix pauli(const FockBasis& basis, int site, PauliAxis axis) {
  if (basis.levels() != 2 || basis.restricted()) {
    throw UnsupportedOperation("Pauli operators need an unrestricted two-level basis");
  }
  CMatrix a = ladder(basis, site, LadderKind::Lower);
  switch (axis) {
    case PauliAxis::X:
      return a + a.adjoint();
    case PauliAxis::Y:
      return kI * (a - CMatrix(a.adjoint()));
    case PauliAxis::Z:
      return 2.0 * number_op(basis, site) - CMatrix::Identity(basis.dim(), basis.dim());
  }
  return {};
}

QubitState qubit_projection(const FockBasis& basis, const CMatrix& rho) {
  FockBasis qubits(basis.num_sites(), 2);
  CMatrix p = CMatrix::Zero(qubits.dim(), basis.dim());
  for (Eigen::Index a = 0; a < basis.dim(); ++a) {
    auto occ = basis.occupation(a);
    bool inside = true;
    for (int n : occ) inside = inside && n <= 1;
    if (inside) p(qubits.index_of(occ), a) = 1.0;
  }
  CMatrix out = p * rho * p.adjoint();
  double weight = out.trace().real();
  if (weight > 0.0) out /= weight;
  return {qubits, out, weight};
}

namespace {

QubitState two_level(const FockBasis& basis, const CMatrix& rho) {
  if (basis.levels() != 2) throw UnsupportedOperation("Pauli observables need a two-level truncation");
  return qubit_projection(basis, rho);
}

}  // namespace

double pauli_correlator(const FockBasis& basis, const CMatrix& rho, std::array<int, 2> sites,
                        std::array<PauliAxis, 2> axes) {
  auto q = two_level(basis, rho);
  return expectation(pauli(q.basis, sites[0], axes[0]) * pauli(q.basis, sites[1], axes[1]), q.rho);
}

double current_from_correlators(const FockBasis& basis, const CMatrix& rho, int j, int k, double phase) {
  using enum PauliAxis;
  auto q = two_level(basis, rho);
  auto corr = [&](PauliAxis a, PauliAxis b) {
    return expectation(pauli(q.basis, j, a) * pauli(q.basis, k, b), q.rho);
  };
  return std::cos(phase) * 0.5 * (corr(X, Y) - corr(Y, X)) - std::sin(phase) * 0.5 * (corr(X, X) + corr(Y, Y));
}

CMatrix chirality_op(const FockBasis& qubits) {
  if (qubits.num_sites() != 3) throw UnsupportedOperation("chirality is defined for three sites");
  using enum PauliAxis;
  const PauliAxis axes[3] = {X, Y, Z};
  CMatrix out = CMatrix::Zero(qubits.dim(), qubits.dim());
  for (int a = 0; a < 3; ++a) {
    for (int s = 1; s <= 2; ++s) {
      int b = (a + s) % 3;
      int c = (a + 2 * s) % 3;
      double sign = s == 1 ? 1.0 : -1.0;
      out += sign * pauli(qubits, 0, axes[a]) * pauli(qubits, 1, axes[b]) * pauli(qubits, 2, axes[c]);
    }
  }
  return out;
}

ChiralityValue chirality(const FockBasis& basis, const CMatrix& rho, bool project) {
  if (basis.levels() != 2 && !project) {
    throw UnsupportedOperation("chirality needs d = 2 (or explicit qubit projection)");
  }
  auto q = qubit_projection(basis, rho);
  return {expectation(chirality_op(q.basis), q.rho), q.weight};
}

double continuity_check(const Trajectory& trajectory, const std::vector<HopTerm>& hops) {
  const FockBasis& basis = trajectory.basis;
  const int n = basis.num_sites();
  const std::size_t count = trajectory.size();
  if (count < 3) return 0.0;
  std::vector<CMatrix> numbers;
  for (int s = 0; s < n; ++s) numbers.push_back(number_op(basis, s));
  std::vector<CMatrix> currents;
  for (const auto& h : hops) currents.push_back(bond_current_op(basis, h.j, h.k, h.phase));

  std::vector<std::vector<double>> occ(count, std::vector<double>(static_cast<std::size_t>(n)));
  for (std::size_t i = 0; i < count; ++i) {
    CMatrix rho = trajectory.density(i);
    for (int s = 0; s < n; ++s) occ[i][static_cast<std::size_t>(s)] = expectation(numbers[static_cast<std::size_t>(s)], rho);
  }
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < count; ++i) {
    CMatrix rho = trajectory.density(i);
    std::vector<double> flow(static_cast<std::size_t>(n), 0.0);
    for (std::size_t h = 0; h < hops.size(); ++h) {
      double current = hops[h].amplitude * expectation(currents[h], rho);
      flow[static_cast<std::size_t>(hops[h].j)] -= current;
      flow[static_cast<std::size_t>(hops[h].k)] += current;
    }
    double span = trajectory.times[i + 1] - trajectory.times[i - 1];
    for (int s = 0; s < n; ++s) {
      auto si = static_cast<std::size_t>(s);
      double derivative = (occ[i + 1][si] - occ[i - 1][si]) / span;
      worst = std::max(worst, std::abs(derivative - flow[si]));
    }
  }
  return worst;
}

}  // namespace chiralsim
