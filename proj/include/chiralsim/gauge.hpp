// Flux bookkeeping on link graphs: loop fluxes, gauge transforms and a
// compiler from target cycle fluxes to per-link phases.

#pragma once

#include "chiralsim/types.hpp"

#include <utility>
#include <vector>

namespace chiralsim {

struct DeviceSpec;

/// Sites 0..n-1 and directed links (j, k). Phases are attached per link in the
/// stored orientation; traversing k -> j picks up the negated phase.
struct LinkGraph {
  int num_sites = 0;
  std::vector<std::pair<int, int>> links;

  static LinkGraph from_device(const DeviceSpec& device);

  /// Index of the link joining a and b and the orientation sign (+1 if stored a->b).
  std::pair<int, int> find(int a, int b) const;
  bool connected() const;
};

/// Site list describing a closed walk; the last site links back to the first.
using Cycle = std::vector<int>;

/// Signed sum of phases along the walk, reduced to (-pi, pi].
double loop_flux(const LinkGraph& graph, const std::vector<double>& phases, const Cycle& cycle);

/// phi_jk -> phi_jk + alpha_j - alpha_k.
std::vector<double> apply_gauge(const LinkGraph& graph, const std::vector<double>& phases,
                                const std::vector<double>& alpha);

/// Spanning-tree link flags, grown breadth-first from site 0, lowest index first.
std::vector<bool> spanning_tree(const LinkGraph& graph);

/// Fundamental cycles of the deterministic spanning tree, one per co-tree
/// link, each starting by traversing that link in its stored direction.
std::vector<Cycle> fundamental_cycles(const LinkGraph& graph);

/// Phases realizing the targets on the fundamental cycle basis: tree links 0,
/// each co-tree link carries its cycle's target.
std::vector<double> compile_fluxes(const LinkGraph& graph, const std::vector<double>& targets);

/// Phases realizing targets on an arbitrary independent cycle set (e.g.
/// plaquettes). Tree links stay at 0; co-tree phases solve the cycle system.
std::vector<double> compile_fluxes(const LinkGraph& graph, const std::vector<Cycle>& cycles,
                                   const std::vector<double>& targets);

/// Per-site angles alpha that take the phases of a ring 0 -> 1 -> ... -> n-1 -> 0
/// to the uniform gauge (every ring link carries flux / n).
std::vector<double> uniform_ring_gauge(const LinkGraph& graph, const std::vector<double>& phases);

}  // namespace chiralsim
