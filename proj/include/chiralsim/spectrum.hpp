// Deterministic Hermitian eigensystems, flux sweeps and band tracking.

#pragma once

#include "chiralsim/device.hpp"
#include "chiralsim/types.hpp"

#include <vector>

namespace chiralsim {

struct EigenSystem {
  RVector values;   // ascending
  CMatrix vectors;  // columns

  double gap() const { return values.size() > 1 ? values(1) - values(0) : 0.0; }
};

/// Hermitian eigendecomposition with reproducible vectors.
///
/// Eigenvalues closer than `degeneracy_tol` (relative to the spectral scale)
/// form a cluster whose basis is rebuilt by Gram-Schmidt on the projected
/// basis kets in enumeration order. Isolated vectors get their largest
/// component (first on ties) real and positive.
EigenSystem eigensystem(const CMatrix& h, double degeneracy_tol = 1e-8);

/// Index ranges [first, last) of degenerate clusters in sorted eigenvalues.
std::vector<std::pair<Eigen::Index, Eigen::Index>> degenerate_clusters(const RVector& values,
                                                                       double degeneracy_tol = 1e-8);

struct FluxSweep {
  int manifold = 1;
  std::vector<double> flux;
  std::vector<EigenSystem> points;

  std::vector<double> gaps() const;
};

/// Hard-core effective spectrum in one excitation manifold over a flux grid.
FluxSweep flux_sweep(const DeviceSpec& device, const std::vector<double>& grid, int manifold);

struct BandCurves {
  std::vector<double> flux;
  /// energies[band][grid index]
  std::vector<std::vector<double>> energies;
  /// Column in the sorted spectrum occupied by each band at each grid index.
  std::vector<std::vector<int>> sorted_index;
};

/// Follow eigenvectors across the sweep by maximal successive overlap.
/// Throws NumericalError naming the interval when the best overlap is below 1/sqrt(2).
BandCurves track_bands(const FluxSweep& sweep);

}  // namespace chiralsim
