// Truncated bosonic Fock space on N sites with d levels per site.

#pragma once

#include "chiralsim/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace chiralsim {

using Occupation = std::vector<int>;

/// Ordered enumeration of occupation tuples (n_1, ..., n_N), 0 <= n_j < d.
///
/// States are listed lexicographically with site 0 most significant. When a
/// sector is given only tuples with sum(n) == sector are kept, in the same
/// relative order. Immutable after construction.
class FockBasis {
 public:
  FockBasis(int num_sites, int levels, std::optional<int> sector = std::nullopt);

  int num_sites() const { return num_sites_; }
  int levels() const { return levels_; }
  const std::optional<int>& sector() const { return sector_; }
  bool restricted() const { return sector_.has_value(); }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(states_.size()); }

  std::span<const int> occupation(Eigen::Index index) const {
    return {states_[static_cast<std::size_t>(index)].data(),
            static_cast<std::size_t>(num_sites_)};
  }
  int occupation(Eigen::Index index, int site) const {
    return states_[static_cast<std::size_t>(index)][static_cast<std::size_t>(site)];
  }
  int total(Eigen::Index index) const;

  /// Index of an occupation tuple, or nullopt when it is not in this basis.
  std::optional<Eigen::Index> find(std::span<const int> occupation) const;
  Eigen::Index index_of(std::span<const int> occupation) const;

  /// Basis vector for an occupation tuple.
  CVector ket(std::span<const int> occupation) const;
  CVector ket(std::initializer_list<int> occupation) const {
    return ket(std::span<const int>(occupation.begin(), occupation.size()));
  }

  bool same_space(const FockBasis& other) const {
    return num_sites_ == other.num_sites_ && levels_ == other.levels_ &&
           sector_ == other.sector_;
  }

 private:
  std::uint64_t encode(std::span<const int> occupation) const;

  int num_sites_;
  int levels_;
  std::optional<int> sector_;
  std::vector<Occupation> states_;
  std::unordered_map<std::uint64_t, Eigen::Index> lookup_;
};

enum class LadderKind { Lower, Raise, Number };

/// Single-site ladder operator. Bare raise/lower need an unrestricted basis.
CMatrix ladder(const FockBasis& basis, int site, LadderKind kind);

CMatrix number_op(const FockBasis& basis, int site);

/// Total excitation number sum_j n_j.
CMatrix total_number(const FockBasis& basis);

/// a_j^dagger a_k. Defined on every basis (number conserving).
CMatrix bilinear(const FockBasis& basis, int j, int k);

/// e^{i phase} a_j^dagger a_k + e^{-i phase} a_j a_k^dagger.
CMatrix hop(const FockBasis& basis, int j, int k, double phase);

/// Diagonal operator f(n_site).
template <typename Fn>
CMatrix number_function(const FockBasis& basis, int site, Fn&& fn) {
  CMatrix out = CMatrix::Zero(basis.dim(), basis.dim());
  for (Eigen::Index i = 0; i < basis.dim(); ++i) {
    out(i, i) = fn(basis.occupation(i, site));
  }
  return out;
}

/// Isometry mapping the states of `sub` into `full` (columns are kets of full).
CMatrix embedding(const FockBasis& sub, const FockBasis& full);

/// Reduced d x d density matrix of one site from a pure state.
CMatrix reduced_density(const FockBasis& basis, const CVector& state, int site);
/// Reduced d x d density matrix of one site from a density matrix.
CMatrix reduced_density(const FockBasis& basis, const CMatrix& rho, int site);

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, double tol = 1e-12) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace chiralsim
