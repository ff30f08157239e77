#include "chiralsim/fock.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace chiralsim {

FockBasis::FockBasis(int num_sites, int levels, std::optional<int> sector)
    : num_sites_(num_sites), levels_(levels), sector_(sector) {
  if (num_sites < 1) throw ConfigError("basis needs at least one site");
  if (levels < 2) throw ConfigError("basis needs at least two levels per site");
  if (sector && (*sector < 0 || *sector > num_sites * (levels - 1))) {
    throw ConfigError("sector " + std::to_string(*sector) + " outside [0, " +
                      std::to_string(num_sites * (levels - 1)) + "]");
  }
  double full = std::pow(static_cast<double>(levels), num_sites);
  if (full > 1e7) throw ConfigError("basis too large for dense representation");

  // Odometer over tuples, last site fastest: lexicographic with site 0 most significant.
  Occupation occ(static_cast<std::size_t>(num_sites), 0);
  while (true) {
    if (!sector || std::accumulate(occ.begin(), occ.end(), 0) == *sector) {
      lookup_.emplace(encode(occ), static_cast<Eigen::Index>(states_.size()));
      states_.push_back(occ);
    }
    int pos = num_sites - 1;
    while (pos >= 0 && occ[static_cast<std::size_t>(pos)] == levels - 1) {
      occ[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++occ[static_cast<std::size_t>(pos)];
  }
}

std::uint64_t FockBasis::encode(std::span<const int> occupation) const {
  std::uint64_t code = 0;
  for (int n : occupation) code = code * static_cast<std::uint64_t>(levels_) + static_cast<std::uint64_t>(n);
  return code;
}

int FockBasis::total(Eigen::Index index) const {
  const auto& occ = states_[static_cast<std::size_t>(index)];
  return std::accumulate(occ.begin(), occ.end(), 0);
}

std::optional<Eigen::Index> FockBasis::find(std::span<const int> occupation) const {
  if (static_cast<int>(occupation.size()) != num_sites_) return std::nullopt;
  for (int n : occupation) {
    if (n < 0 || n >= levels_) return std::nullopt;
  }
  auto it = lookup_.find(encode(occupation));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

Eigen::Index FockBasis::index_of(std::span<const int> occupation) const {
  auto idx = find(occupation);
  if (!idx) throw ConfigError("occupation tuple not in basis");
  return *idx;
}

CVector FockBasis::ket(std::span<const int> occupation) const {
  CVector v = CVector::Zero(dim());
  v(index_of(occupation)) = 1.0;
  return v;
}

namespace {

void check_site(const FockBasis& basis, int site) {
  if (site < 0 || site >= basis.num_sites()) {
    throw ConfigError("site index " + std::to_string(site) + " out of range");
  }
}

}  // namespace

CMatrix ladder(const FockBasis& basis, int site, LadderKind kind) {
  check_site(basis, site);
  if (kind == LadderKind::Number) return number_op(basis, site);
  if (basis.restricted()) {
    throw UnsupportedOperation("bare ladder operators leave a fixed-number sector");
  }
  CMatrix out = CMatrix::Zero(basis.dim(), basis.dim());
  Occupation target(static_cast<std::size_t>(basis.num_sites()));
  for (Eigen::Index col = 0; col < basis.dim(); ++col) {
    auto occ = basis.occupation(col);
    target.assign(occ.begin(), occ.end());
    int n = target[static_cast<std::size_t>(site)];
    if (kind == LadderKind::Lower) {
      if (n == 0) continue;
      target[static_cast<std::size_t>(site)] = n - 1;
      out(basis.index_of(target), col) = std::sqrt(static_cast<double>(n));
    } else {
      if (n + 1 >= basis.levels()) continue;
      target[static_cast<std::size_t>(site)] = n + 1;
      out(basis.index_of(target), col) = std::sqrt(static_cast<double>(n + 1));
    }
  }
  return out;
}

CMatrix number_op(const FockBasis& basis, int site) {
  check_site(basis, site);
  return number_function(basis, site, [](int n) { return static_cast<double>(n); });
}

CMatrix total_number(const FockBasis& basis) {
  CMatrix out = CMatrix::Zero(basis.dim(), basis.dim());
  for (Eigen::Index i = 0; i < basis.dim(); ++i) out(i, i) = basis.total(i);
  return out;
}

CMatrix bilinear(const FockBasis& basis, int j, int k) {
  check_site(basis, j);
  check_site(basis, k);
  if (j == k) return number_op(basis, j);
  CMatrix out = CMatrix::Zero(basis.dim(), basis.dim());
  Occupation target(static_cast<std::size_t>(basis.num_sites()));
  for (Eigen::Index col = 0; col < basis.dim(); ++col) {
    auto occ = basis.occupation(col);
    int nk = occ[static_cast<std::size_t>(k)];
    int nj = occ[static_cast<std::size_t>(j)];
    if (nk == 0 || nj + 1 >= basis.levels()) continue;
    target.assign(occ.begin(), occ.end());
    target[static_cast<std::size_t>(k)] = nk - 1;
    target[static_cast<std::size_t>(j)] = nj + 1;
    out(basis.index_of(target), col) = std::sqrt(static_cast<double>(nk) * (nj + 1));
  }
  return out;
}

CMatrix hop(const FockBasis& basis, int j, int k, double phase) {
  if (j == k) throw ConfigError("hop needs two distinct sites");
  CMatrix forward = std::polar(1.0, phase) * bilinear(basis, j, k);
  return forward + forward.adjoint();
}

CMatrix embedding(const FockBasis& sub, const FockBasis& full) {
  if (sub.num_sites() != full.num_sites()) throw ConfigError("embedding: site count mismatch");
  CMatrix out = CMatrix::Zero(full.dim(), sub.dim());
  for (Eigen::Index i = 0; i < sub.dim(); ++i) {
    auto idx = full.find(sub.occupation(i));
    if (!idx) throw ConfigError("embedding: state missing from target basis");
    out(*idx, i) = 1.0;
  }
  return out;
}

CMatrix reduced_density(const FockBasis& basis, const CMatrix& rho, int site) {
  check_site(basis, site);
  const int d = basis.levels();
  CMatrix out = CMatrix::Zero(d, d);
  // rho_site[n, m] = sum over pairs (a, b) that agree on every other site.
  for (Eigen::Index a = 0; a < basis.dim(); ++a) {
    auto oa = basis.occupation(a);
    for (Eigen::Index b = 0; b < basis.dim(); ++b) {
      auto ob = basis.occupation(b);
      bool match = true;
      for (int s = 0; s < basis.num_sites() && match; ++s) {
        if (s != site && oa[static_cast<std::size_t>(s)] != ob[static_cast<std::size_t>(s)]) match = false;
      }
      if (match) out(oa[static_cast<std::size_t>(site)], ob[static_cast<std::size_t>(site)]) += rho(a, b);
    }
  }
  return out;
}

CMatrix reduced_density(const FockBasis& basis, const CVector& state, int site) {
  return reduced_density(basis, CMatrix(state * state.adjoint()), site);
}

}  // namespace chiralsim
