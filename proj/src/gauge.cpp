#include "chiralsim/gauge.hpp"

#include "chiralsim/device.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace chiralsim {

LinkGraph LinkGraph::from_device(const DeviceSpec& device) {
  LinkGraph g;
  g.num_sites = device.num_sites();
  for (const auto& l : device.links) g.links.emplace_back(l.j, l.k);
  return g;
}

std::pair<int, int> LinkGraph::find(int a, int b) const {
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i].first == a && links[i].second == b) return {static_cast<int>(i), +1};
    if (links[i].first == b && links[i].second == a) return {static_cast<int>(i), -1};
  }
  return {-1, 0};
}

namespace {

std::vector<std::vector<int>> adjacency(const LinkGraph& graph) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(graph.num_sites));
  for (const auto& [a, b] : graph.links) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

struct Tree {
  std::vector<bool> in_tree;
  std::vector<int> parent;
  std::vector<int> depth;
};

Tree grow_tree(const LinkGraph& graph) {
  Tree t;
  t.in_tree.assign(graph.links.size(), false);
  t.parent.assign(static_cast<std::size_t>(graph.num_sites), -1);
  t.depth.assign(static_cast<std::size_t>(graph.num_sites), -1);
  if (graph.num_sites == 0) return t;
  auto adj = adjacency(graph);
  std::deque<int> queue{0};
  t.depth[0] = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (t.depth[static_cast<std::size_t>(v)] >= 0) continue;
      t.depth[static_cast<std::size_t>(v)] = t.depth[static_cast<std::size_t>(u)] + 1;
      t.parent[static_cast<std::size_t>(v)] = u;
      t.in_tree[static_cast<std::size_t>(graph.find(u, v).first)] = true;
      queue.push_back(v);
    }
  }
  return t;
}

// Tree path from a to b, inclusive.
std::vector<int> tree_path(const Tree& t, int a, int b) {
  std::vector<int> up_a{a}, up_b{b};
  int x = a, y = b;
  while (t.depth[static_cast<std::size_t>(x)] > t.depth[static_cast<std::size_t>(y)]) {
    x = t.parent[static_cast<std::size_t>(x)];
    up_a.push_back(x);
  }
  while (t.depth[static_cast<std::size_t>(y)] > t.depth[static_cast<std::size_t>(x)]) {
    y = t.parent[static_cast<std::size_t>(y)];
    up_b.push_back(y);
  }
  while (x != y) {
    x = t.parent[static_cast<std::size_t>(x)];
    y = t.parent[static_cast<std::size_t>(y)];
    up_a.push_back(x);
    up_b.push_back(y);
  }
  up_b.pop_back();  // common ancestor already at the end of up_a
  up_a.insert(up_a.end(), up_b.rbegin(), up_b.rend());
  return up_a;
}

}  // namespace

bool LinkGraph::connected() const {
  auto t = grow_tree(*this);
  return std::all_of(t.depth.begin(), t.depth.end(), [](int d) { return d >= 0; });
}

double loop_flux(const LinkGraph& graph, const std::vector<double>& phases, const Cycle& cycle) {
  if (phases.size() != graph.links.size()) throw ConfigError("phase count does not match link count");
  if (cycle.size() < 2) throw ConfigError("cycle needs at least two sites");
  double sum = 0.0;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    int a = cycle[i];
    int b = cycle[(i + 1) % cycle.size()];
    auto [idx, sign] = graph.find(a, b);
    if (idx < 0) {
      throw ConfigError("cycle uses missing link (" + std::to_string(a + 1) + "," +
                        std::to_string(b + 1) + ")");
    }
    sum += sign * phases[static_cast<std::size_t>(idx)];
  }
  return wrap_phase(sum);
}

std::vector<double> apply_gauge(const LinkGraph& graph, const std::vector<double>& phases,
                                const std::vector<double>& alpha) {
  if (static_cast<int>(alpha.size()) != graph.num_sites) throw ConfigError("gauge angle count mismatch");
  std::vector<double> out(phases);
  for (std::size_t i = 0; i < graph.links.size(); ++i) {
    auto [j, k] = graph.links[i];
    out[i] += alpha[static_cast<std::size_t>(j)] - alpha[static_cast<std::size_t>(k)];
  }
  return out;
}

std::vector<bool> spanning_tree(const LinkGraph& graph) { return grow_tree(graph).in_tree; }

std::vector<Cycle> fundamental_cycles(const LinkGraph& graph) {
  auto t = grow_tree(graph);
  std::vector<Cycle> cycles;
  for (std::size_t i = 0; i < graph.links.size(); ++i) {
    if (t.in_tree[i]) continue;
    auto [u, v] = graph.links[i];
    if (t.depth[static_cast<std::size_t>(u)] < 0) continue;
    auto path = tree_path(t, v, u);
    Cycle c{u};
    c.insert(c.end(), path.begin(), path.end() - 1);
    cycles.push_back(std::move(c));
  }
  return cycles;
}

std::vector<double> compile_fluxes(const LinkGraph& graph, const std::vector<double>& targets) {
  if (!graph.connected()) throw ConfigError("compile_fluxes: graph is disconnected");
  auto tree = spanning_tree(graph);
  std::size_t cotree = static_cast<std::size_t>(std::count(tree.begin(), tree.end(), false));
  if (targets.size() != cotree) {
    throw ConfigError("compile_fluxes: expected " + std::to_string(cotree) + " targets, got " +
                      std::to_string(targets.size()));
  }
  std::vector<double> phases(graph.links.size(), 0.0);
  std::size_t next = 0;
  for (std::size_t i = 0; i < graph.links.size(); ++i) {
    if (!tree[i]) phases[i] = wrap_phase(targets[next++]);
  }
  return phases;
}

std::vector<double> compile_fluxes(const LinkGraph& graph, const std::vector<Cycle>& cycles,
                                   const std::vector<double>& targets) {
  if (!graph.connected()) throw ConfigError("compile_fluxes: graph is disconnected");
  if (cycles.size() != targets.size()) throw ConfigError("compile_fluxes: one target per cycle");
  auto tree = spanning_tree(graph);
  std::vector<int> column(graph.links.size(), -1);
  int ncols = 0;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (!tree[i]) column[i] = ncols++;
  }
  if (static_cast<int>(cycles.size()) != ncols) {
    throw ConfigError("compile_fluxes: need " + std::to_string(ncols) + " independent cycles");
  }
  std::vector<double> phases(graph.links.size(), 0.0);
  if (ncols == 0) return phases;
  RMatrix m = RMatrix::Zero(ncols, ncols);
  RVector rhs(ncols);
  for (std::size_t r = 0; r < cycles.size(); ++r) {
    const auto& c = cycles[r];
    for (std::size_t i = 0; i < c.size(); ++i) {
      auto [idx, sign] = graph.find(c[i], c[(i + 1) % c.size()]);
      if (idx < 0) throw ConfigError("compile_fluxes: cycle uses a missing link");
      int col = column[static_cast<std::size_t>(idx)];
      if (col >= 0) m(static_cast<Eigen::Index>(r), col) += sign;
    }
    rhs(static_cast<Eigen::Index>(r)) = targets[r];
  }
  Eigen::FullPivLU<RMatrix> lu(m);
  if (lu.rank() < ncols) throw ConfigError("compile_fluxes: cycles are not independent");
  RVector x = lu.solve(rhs);
  for (std::size_t i = 0; i < graph.links.size(); ++i) {
    if (column[i] >= 0) phases[i] = wrap_phase(x(column[i]));
  }
  return phases;
}

std::vector<double> uniform_ring_gauge(const LinkGraph& graph, const std::vector<double>& phases) {
  const int n = graph.num_sites;
  Cycle ring(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ring[static_cast<std::size_t>(i)] = i;
  double per_link = loop_flux(graph, phases, ring) / n;
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i + 1 < n; ++i) {
    auto [idx, sign] = graph.find(i, i + 1);
    alpha[static_cast<std::size_t>(i + 1)] =
        alpha[static_cast<std::size_t>(i)] + sign * phases[static_cast<std::size_t>(idx)] - per_link;
  }
  return alpha;
}

}  // namespace chiralsim
