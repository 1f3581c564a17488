#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hesslens/linalg.hpp"
#include "hesslens/random.hpp"
#include "oracles.hpp"

using namespace hesslens;
using oracle::kind;
using oracle::thrown_kind;

namespace {

double residual_bound(const DenseMatrix& a) { return 1e-8 * std::max(1.0, a.frobenius_norm()); }

void check_decomposition(const DenseMatrix& a) {
  const auto eig = symmetric_eigendecomposition(a);
  const std::size_t n = a.rows();
  REQUIRE(eig.eigenvalues.size() == n);
  for (std::size_t i = 1; i < n; ++i) CHECK(eig.eigenvalues[i - 1] <= eig.eigenvalues[i]);

  const DenseMatrix& q = eig.eigenvectors;
  const DenseMatrix qtq = q.transpose().multiply(q);
  double ortho = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) ortho = std::max(ortho, std::abs(qtq(i, j) - (i == j ? 1.0 : 0.0)));
  CHECK(ortho <= 1e-8);

  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto qi = q.column(i);
    auto aq = a.multiply(qi);
    for (std::size_t k = 0; k < n; ++k) aq[k] -= eig.eigenvalues[i] * qi[k];
    worst = std::max(worst, norm2(aq));
  }
  CHECK(worst <= residual_bound(a));

  double sum = 0.0, sq = 0.0;
  for (double l : eig.eigenvalues) {
    sum += l;
    sq += l * l;
  }
  const double f = a.frobenius_norm();
  CHECK(std::abs(sum - a.trace()) <= 1e-8 * std::max(1.0, f));
  CHECK(std::abs(sq - f * f) <= 1e-8 * std::max(1.0, f * f));
}

}  // namespace

TEST_CASE("dense matrix basics") {
  DenseMatrix m(2, 3, 1.5);
  CHECK(m.entries().size() == 6);
  CHECK(m(1, 2) == 1.5);
  CHECK(thrown_kind([] { DenseMatrix(2, 2, std::vector<double>{1, 2, 3}); }) == kind(ErrorKind::dimension));
  const auto a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  CHECK(a.trace() == 5.0);
  CHECK(a.transpose()(0, 1) == 3.0);
  CHECK(a.asymmetry() == 1.0);
  const auto ax = a.multiply(std::vector<double>{1, 1});
  CHECK(ax == std::vector<double>{3, 7});
  CHECK(a.multiply(DenseMatrix::identity(2)) == a);
  CHECK(a.max_abs() == 4.0);
  CHECK(a.frobenius_norm() == doctest::Approx(std::sqrt(30.0)));
}

TEST_CASE("symmetrize") {
  SUBCASE("already symmetric") {
    const auto a = DenseMatrix::from_rows({{1, 2}, {2, 1}});
    const auto r = symmetrize(a);
    CHECK(r.matrix == a);
    CHECK(r.asymmetry == 0.0);
  }
  SUBCASE("upper triangular") {
    const auto r = symmetrize(DenseMatrix::from_rows({{0, 1}, {0, 0}}));
    CHECK(r.matrix == DenseMatrix::from_rows({{0, 0.5}, {0.5, 0}}));
    CHECK(r.asymmetry == 1.0);
  }
  SUBCASE("identity") {
    const auto r = symmetrize(DenseMatrix::identity(5));
    CHECK(r.matrix == DenseMatrix::identity(5));
    CHECK(r.asymmetry == 0.0);
  }
  SUBCASE("non-square") {
    CHECK(thrown_kind([] { symmetrize(DenseMatrix(2, 3)); }) == kind(ErrorKind::dimension));
  }
}

TEST_CASE("symmetry tolerance scales with the largest entry") {
  CHECK(within_symmetry_tolerance(1e-8, 0.5));
  CHECK_FALSE(within_symmetry_tolerance(2e-8, 0.5));
  CHECK(within_symmetry_tolerance(1e-6, 100.0));
  CHECK_FALSE(within_symmetry_tolerance(2e-6, 100.0));
}

TEST_CASE("eigenvalues of small analytic matrices") {
  const auto e2 = symmetric_eigenvalues(DenseMatrix::from_rows({{2, 1}, {1, 2}}));
  REQUIRE(e2.size() == 2);
  CHECK(e2[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e2[1] == doctest::Approx(3.0).epsilon(1e-14));

  const std::vector<double> d{3, -1, 0};
  const auto e3 = symmetric_eigenvalues(DenseMatrix::diagonal(d));
  CHECK(e3 == std::vector<double>{-1, 0, 3});

  const auto one = symmetric_eigendecomposition(DenseMatrix::from_rows({{-4}}));
  CHECK(one.eigenvalues == std::vector<double>{-4});
  CHECK(one.eigenvectors(0, 0) == 1.0);

  const auto zero = symmetric_eigenvalues(DenseMatrix(6, 6));
  for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("eigenvector sign convention") {
  const auto eig = symmetric_eigendecomposition(DenseMatrix::from_rows({{2, -1, 0}, {-1, 2, -1}, {0, -1, 2}}));
  for (std::size_t i = 0; i < 3; ++i) {
    const auto q = eig.eigenvectors.column(i);
    for (double v : q) {
      if (std::abs(v) > 1e-10) {
        CHECK(v > 0.0);
        break;
      }
    }
  }
}

TEST_CASE("random symmetric 50x50 reconstructs") {
  const auto a = oracle::random_symmetric(50, 7);
  const auto eig = symmetric_eigendecomposition(a);
  const auto& q = eig.eigenvectors;
  double worst = 0.0;
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = 0; j < 50; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 50; ++k) s += q(i, k) * eig.eigenvalues[k] * q(j, k);
      worst = std::max(worst, std::abs(s - a(i, j)));
    }
  CHECK(worst <= 1e-10 * a.frobenius_norm());
}

TEST_CASE("residual, orthonormality, trace and Frobenius identities") {
  for (std::size_t n : {1u, 2u, 3u, 17u, 64u, 150u}) {
    CAPTURE(n);
    check_decomposition(oracle::random_symmetric(n, 100 + n));
  }
}

TEST_CASE("degenerate and structured spectra") {
  SUBCASE("repeated eigenvalues") {
    const auto q = oracle::random_orthonormal(12, 3);
    std::vector<double> lam{0, 0, 0, 0, 0, 1, 1, 1, 2, 2, 5, 5};
    DenseMatrix a(12, 12);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 12; ++j)
        for (std::size_t k = 0; k < 12; ++k) a(i, j) += q(i, k) * lam[k] * q(j, k);
    a = symmetrize(a).matrix;
    check_decomposition(a);
    const auto e = symmetric_eigenvalues(a);
    for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(e[i] - lam[i]) <= 1e-9);
  }
  SUBCASE("zero rows and columns") {
    auto a = oracle::random_symmetric(20, 9);
    for (std::size_t k : {0u, 3u, 4u, 11u, 19u})
      for (std::size_t j = 0; j < 20; ++j) a(k, j) = a(j, k) = 0.0;
    check_decomposition(a);
    const auto e = symmetric_eigenvalues(a);
    CHECK(std::count_if(e.begin(), e.end(), [](double v) { return std::abs(v) < 1e-12; }) >= 5);
  }
  SUBCASE("widely spread magnitudes") {
    std::vector<double> d;
    for (int i = 0; i < 30; ++i) d.push_back(std::pow(10.0, i % 2 == 0 ? -i / 3.0 : i / 4.0));
    const auto q = oracle::random_orthonormal(30, 4);
    DenseMatrix a(30, 30);
    for (std::size_t i = 0; i < 30; ++i)
      for (std::size_t j = 0; j < 30; ++j)
        for (std::size_t k = 0; k < 30; ++k) a(i, j) += q(i, k) * d[k] * q(j, k);
    check_decomposition(symmetrize(a).matrix);
  }
}

TEST_CASE("QLambdaQ^T built from a random orthonormal Q recovers Lambda") {
  const std::size_t n = 40;
  const auto q = oracle::random_orthonormal(n, 11);
  std::vector<double> lam(n);
  hesslens::Rng rng(12);
  for (auto& v : lam) v = 3.0 * rng.normal();
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) a(i, j) += q(i, k) * lam[k] * q(j, k);
  a = symmetrize(a).matrix;
  std::sort(lam.begin(), lam.end());
  const auto e = symmetric_eigenvalues(a);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(e[i] - lam[i]) <= 1e-9);
}

TEST_CASE("eigensolver is deterministic and eigenvalue-only path agrees") {
  const auto a = oracle::random_symmetric(60, 21);
  const auto e1 = symmetric_eigendecomposition(a);
  const auto e2 = symmetric_eigendecomposition(a);
  CHECK(e1.eigenvalues == e2.eigenvalues);
  CHECK(e1.eigenvectors == e2.eigenvectors);
  const auto only = symmetric_eigenvalues(a);
  for (std::size_t i = 0; i < only.size(); ++i) CHECK(std::abs(only[i] - e1.eigenvalues[i]) <= 1e-12 * a.frobenius_norm());
}

TEST_CASE("eigensolver rejects bad input") {
  CHECK(thrown_kind([] { symmetric_eigendecomposition(DenseMatrix(2, 3)); }) == kind(ErrorKind::dimension));
  CHECK(thrown_kind([] { symmetric_eigendecomposition(DenseMatrix::from_rows({{1, 1}, {0, 1}})); }) ==
        kind(ErrorKind::numeric));
  try {
    symmetric_eigendecomposition(DenseMatrix::from_rows({{1, 0.25}, {0, 1}}));
    FAIL("asymmetric input accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("0.25") != std::string::npos);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(thrown_kind([&] { symmetric_eigendecomposition(DenseMatrix::from_rows({{1, nan}, {nan, 1}})); }) ==
        kind(ErrorKind::numeric));
  CHECK(thrown_kind([&] { symmetric_eigenvalues(DenseMatrix::from_rows({{inf}})); }) == kind(ErrorKind::numeric));
  // tiny asymmetry within tolerance is accepted
  CHECK_NOTHROW(symmetric_eigenvalues(DenseMatrix::from_rows({{1, 0.5 + 1e-10}, {0.5, 1}})));
}

TEST_CASE("dot and norm") {
  const std::vector<double> x{3, 4};
  CHECK(dot(x, x) == 25.0);
  CHECK(norm2(x) == doctest::Approx(5.0));
  const std::vector<double> big{1e200, 1e200};
  CHECK(norm2(big) == doctest::Approx(std::sqrt(2.0) * 1e200));
  CHECK(norm2(std::vector<double>{}) == 0.0);
}
