#include "chiralsim/spectrum.hpp"

#include "chiralsim/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace chiralsim {

namespace {

double spectral_scale(const RVector& values) {
  double scale = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
  return scale > 0.0 ? scale : 1.0;
}

void fix_phase(Eigen::Ref<CVector> v) {
  double best = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= best * (1.0 - 1e-9)) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = std::abs(v(i));
      return;
    }
  }
}

// Orthonormal basis of span(Q) built from Gram-Schmidt on Q Q^dagger r for
// the candidate vectors r, taken in the given order.
CMatrix rebuild_cluster(const CMatrix& q, const std::vector<CVector>& candidates) {
  const Eigen::Index m = q.cols();
  CMatrix out(q.rows(), m);
  Eigen::Index filled = 0;
  for (const auto& r : candidates) {
    if (filled == m) break;
    CVector v = q * (q.adjoint() * r);
    for (Eigen::Index c = 0; c < filled; ++c) v -= out.col(c) * out.col(c).dot(v);
    for (Eigen::Index c = 0; c < filled; ++c) v -= out.col(c) * out.col(c).dot(v);
    double norm = v.norm();
    if (norm < 1e-6) continue;
    out.col(filled++) = v / norm;
  }
  if (filled < m) throw NumericalError("could not rebuild a degenerate eigenspace");
  return out;
}

}  // namespace

std::vector<std::pair<Eigen::Index, Eigen::Index>> degenerate_clusters(const RVector& values,
                                                                       double degeneracy_tol) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  double tol = degeneracy_tol * spectral_scale(values);
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= values.size(); ++i) {
    if (i == values.size() || values(i) - values(i - 1) > tol) {
      out.emplace_back(start, i);
      start = i;
    }
  }
  return out;
}

EigenSystem eigensystem(const CMatrix& h, double degeneracy_tol) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  EigenSystem es{solver.eigenvalues(), solver.eigenvectors()};
  const Eigen::Index n = h.rows();
  for (auto [first, last] : degenerate_clusters(es.values, degeneracy_tol)) {
    if (last - first == 1) {
      fix_phase(es.vectors.col(first));
      continue;
    }
    std::vector<CVector> kets;
    for (Eigen::Index i = 0; i < n; ++i) kets.push_back(CVector::Unit(n, i));
    CMatrix q = es.vectors.middleCols(first, last - first);
    es.vectors.middleCols(first, last - first) = rebuild_cluster(q, kets);
  }
  return es;
}

std::vector<double> FluxSweep::gaps() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.gap());
  return out;
}

FluxSweep flux_sweep(const DeviceSpec& device, const std::vector<double>& grid, int manifold) {
  if (grid.empty()) throw ConfigError("flux grid is empty");
  FluxSweep sweep;
  sweep.manifold = manifold;
  sweep.flux = grid;
  FockBasis basis(device.num_sites(), 2, manifold);
  for (double phi : grid) {
    auto eff = build_effective(with_loop_flux(device, phi), basis);
    sweep.points.push_back(eigensystem(eff.matrix));
  }
  return sweep;
}

BandCurves track_bands(const FluxSweep& sweep) {
  BandCurves out;
  out.flux = sweep.flux;
  if (sweep.points.empty()) return out;
  const Eigen::Index dim = sweep.points.front().values.size();
  const double threshold = 1.0 / std::sqrt(2.0);

  auto align = [&](const EigenSystem& es, const CMatrix& reference) {
    CMatrix vecs = es.vectors;
    for (auto [first, last] : degenerate_clusters(es.values)) {
      if (last - first == 1) continue;
      CMatrix q = vecs.middleCols(first, last - first);
      std::vector<std::pair<double, Eigen::Index>> weight;
      for (Eigen::Index b = 0; b < reference.cols(); ++b) {
        weight.emplace_back((q.adjoint() * reference.col(b)).norm(), b);
      }
      std::stable_sort(weight.begin(), weight.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      std::vector<CVector> candidates;
      for (auto [w, b] : weight) candidates.emplace_back(reference.col(b));
      for (Eigen::Index i = 0; i < dim; ++i) candidates.push_back(CVector::Unit(dim, i));
      vecs.middleCols(first, last - first) = rebuild_cluster(q, candidates);
    }
    return vecs;
  };

  out.energies.assign(static_cast<std::size_t>(dim), {});
  out.sorted_index.assign(static_cast<std::size_t>(dim), {});

  // Band b is tracked by vector tracked.col(b).
  CMatrix tracked = sweep.points.size() > 1 ? align(sweep.points[0], sweep.points[1].vectors)
                                            : sweep.points[0].vectors;
  for (Eigen::Index b = 0; b < dim; ++b) {
    out.energies[static_cast<std::size_t>(b)].push_back(sweep.points[0].values(b));
    out.sorted_index[static_cast<std::size_t>(b)].push_back(static_cast<int>(b));
  }

  for (std::size_t i = 1; i < sweep.points.size(); ++i) {
    const auto& es = sweep.points[i];
    CMatrix cur = align(es, tracked);
    RMatrix overlap = (tracked.adjoint() * cur).cwiseAbs();
    std::vector<int> assign(static_cast<std::size_t>(dim), -1);
    std::vector<bool> used(static_cast<std::size_t>(dim), false);
    for (Eigen::Index round = 0; round < dim; ++round) {
      double best = -1.0;
      Eigen::Index bb = -1, bc = -1;
      for (Eigen::Index b = 0; b < dim; ++b) {
        if (assign[static_cast<std::size_t>(b)] >= 0) continue;
        for (Eigen::Index c = 0; c < dim; ++c) {
          if (used[static_cast<std::size_t>(c)]) continue;
          if (overlap(b, c) > best) {
            best = overlap(b, c);
            bb = b;
            bc = c;
          }
        }
      }
      if (best < threshold - 1e-12) {
        throw NumericalError("ambiguous band overlap between flux " + std::to_string(sweep.flux[i - 1]) +
                             " and " + std::to_string(sweep.flux[i]) + " (best overlap " +
                             std::to_string(best) + ")");
      }
      assign[static_cast<std::size_t>(bb)] = static_cast<int>(bc);
      used[static_cast<std::size_t>(bc)] = true;
    }
    CMatrix next(dim, dim);
    for (Eigen::Index b = 0; b < dim; ++b) {
      int c = assign[static_cast<std::size_t>(b)];
      next.col(b) = cur.col(c);
      out.energies[static_cast<std::size_t>(b)].push_back(es.values(c));
      out.sorted_index[static_cast<std::size_t>(b)].push_back(c);
    }
    tracked = std::move(next);
  }
  return out;
}

}  // namespace chiralsim
