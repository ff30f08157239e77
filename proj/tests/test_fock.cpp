#include "chiralsim/fock.hpp"

#include <doctest.h>

#include <cmath>

using namespace chiralsim;

TEST_CASE("basis dimensions") {
  CHECK(FockBasis(3, 2, 1).dim() == 3);
  CHECK(FockBasis(3, 2).dim() == 8);
  CHECK(FockBasis(3, 3, 2).dim() == 6);
  CHECK(FockBasis(2, 4).dim() == 16);
  CHECK_THROWS_AS(FockBasis(3, 3, 7), ConfigError);
}

TEST_CASE("enumeration is lexicographic with site 0 most significant") {
  FockBasis b(3, 2);
  for (Eigen::Index i = 0; i < b.dim(); ++i) {
    int code = 4 * b.occupation(i, 0) + 2 * b.occupation(i, 1) + b.occupation(i, 2);
    CHECK(code == i);
  }
  FockBasis s(3, 2, 1);
  CHECK(s.occupation(0, 2) == 1);
  CHECK(s.occupation(2, 0) == 1);
  CHECK(s.index_of(std::vector<int>{1, 0, 0}) == 2);
  CHECK_FALSE(s.find(std::vector<int>{1, 1, 0}).has_value());
}

TEST_CASE("invalid bases and states") {
  CHECK_THROWS_AS(FockBasis(0, 2), ConfigError);
  CHECK_THROWS_AS(FockBasis(2, 1), ConfigError);
  FockBasis b(2, 2);
  CHECK_THROWS(b.ket({2, 0}));
  CHECK_THROWS(b.ket({1}));
}

TEST_CASE("ladder operators") {
  FockBasis one(1, 2);
  CMatrix a = ladder(one, 0, LadderKind::Lower);
  CHECK(std::abs(a(0, 1) - Complex(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(a(1, 0)) < 1e-15);
  CHECK(std::abs(a(0, 0)) + std::abs(a(1, 1)) < 1e-15);

  FockBasis q(1, 3);
  CMatrix n = number_op(q, 0);
  CHECK(n.diagonal().real().isApprox(RVector((RVector(3) << 0, 1, 2).finished())));
  CMatrix a3 = ladder(q, 0, LadderKind::Lower);
  CMatrix comm = a3 * a3.adjoint() - a3.adjoint() * a3;
  CMatrix expected = CMatrix::Identity(3, 3);
  expected(2, 2) -= 3.0;
  CHECK((comm - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  FockBasis sector(2, 2, 1);
  CHECK_THROWS_AS(ladder(sector, 0, LadderKind::Lower), UnsupportedOperation);
}

TEST_CASE("hop operator") {
  FockBasis b(2, 2, 1);
  CMatrix h0 = hop(b, 0, 1, 0.0);
  CHECK(std::abs(h0(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(h0(1, 0) - 1.0) < 1e-15);
  CMatrix hpi = hop(b, 0, 1, kPi);
  CHECK(std::abs(hpi(0, 1) + 1.0) < 1e-12);
  CHECK(is_hermitian(hop(FockBasis(3, 3), 0, 2, 0.7)));

  // Single-excitation ring with phase pi/2 on every link.
  FockBasis ring(3, 2, 1);
  CMatrix h = hop(ring, 0, 1, kPi / 2) + hop(ring, 1, 2, kPi / 2) + hop(ring, 2, 0, kPi / 2);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  RVector e = es.eigenvalues();
  CHECK(e(0) == doctest::Approx(-std::sqrt(3.0)));
  CHECK(e(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e(2) == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("bilinear and hop agree on sector and full bases") {
  FockBasis full(3, 3);
  FockBasis sector(3, 3, 2);
  CMatrix emb = embedding(sector, full);
  CMatrix from_full = emb.adjoint() * hop(full, 0, 2, 0.3) * emb;
  CHECK((from_full - hop(sector, 0, 2, 0.3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((total_number(sector) - 2.0 * CMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("reduced density") {
  FockBasis b(3, 2, 1);
  CMatrix r = reduced_density(b, b.ket({1, 0, 0}), 0);
  CHECK(std::abs(r(1, 1) - 1.0) < 1e-15);
  CHECK(std::abs((r * r).trace() - 1.0) < 1e-15);

  CVector w = (b.ket({1, 0, 0}) + b.ket({0, 1, 0}) + b.ket({0, 0, 1})) / std::sqrt(3.0);
  for (int s = 0; s < 3; ++s) {
    CMatrix rw = reduced_density(b, w, s);
    CHECK(rw(0, 0).real() == doctest::Approx(2.0 / 3.0));
    CHECK(rw(1, 1).real() == doctest::Approx(1.0 / 3.0));
    CHECK((rw * rw).trace().real() == doctest::Approx(5.0 / 9.0));
  }

  FockBasis full(3, 2);
  CMatrix mixed = CMatrix::Identity(8, 8) / 8.0;
  CMatrix rm = reduced_density(full, mixed, 1);
  CHECK((rm - CMatrix::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-15);
}
