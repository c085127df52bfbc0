#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "bridge.hpp"
#include "linalg.hpp"

using namespace neckcalib;
using namespace neckcalib::linalg;
using testing_bridge::to_dense;

namespace {

std::vector<std::vector<int>> collect(int n, int k) {
  std::vector<std::vector<int>> out;
  for (const auto& s : enumerate_subsets(n, k)) out.emplace_back(s.indices().begin(), s.indices().end());
  return out;
}

}  // namespace

// ---- enumerate_subsets ------------------------------------------------------------

TEST(EnumerateSubsets, ThreeChooseTwo) {
  EXPECT_EQ(collect(3, 2), (std::vector<std::vector<int>>{{0, 1}, {0, 2}, {1, 2}}));
}

TEST(EnumerateSubsets, EmptySubset) {
  const auto all = collect(4, 0);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_TRUE(all[0].empty());
  EXPECT_EQ(enumerate_subsets(4, 0).size(), 1u);
}

TEST(EnumerateSubsets, SixChooseThreeMatchesBruteForce) {
  const auto all = collect(6, 3);
  ASSERT_EQ(all.size(), 20u);
  EXPECT_EQ(all.front(), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(all.back(), (std::vector<int>{3, 4, 5}));
  EXPECT_EQ(all, oracle::brute_subsets(6, 3));
}

TEST(EnumerateSubsets, MatchesBruteForceEverywhereUpToTwelve) {
  for (int n = 0; n <= 12; ++n)
    for (int k = 0; k <= n; ++k) {
      const auto all = collect(n, k);
      EXPECT_EQ(all, oracle::brute_subsets(n, k)) << n << " choose " << k;
      EXPECT_EQ(all.size(), binomial(n, k));
    }
}

TEST(EnumerateSubsets, LargestUniverseCountsWithoutStoring) {
  std::uint64_t count = 0;
  for (const auto& s : enumerate_subsets(20, 10)) {
    (void)s;
    ++count;
  }
  EXPECT_EQ(count, 184756u);
}

TEST(EnumerateSubsets, RejectsBadArguments) {
  EXPECT_ERROR_KIND(enumerate_subsets(3, 4), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(enumerate_subsets(21, 2), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(enumerate_subsets(-1, 0), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(enumerate_subsets(3, -1), ErrorKind::invalid_argument);
}

TEST(IndexSubset, ValidatesIndices) {
  EXPECT_NO_THROW(IndexSubset({0, 2}, 3));
  EXPECT_ERROR_KIND(IndexSubset({1, 1}, 3), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(IndexSubset({2, 1}, 3), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(IndexSubset({0, 3}, 3), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(IndexSubset({-1}, 3), ErrorKind::invalid_argument);
}

// ---- DenseMatrix ---------------------------------------------------------------------

TEST(DenseMatrix, RejectsNonFiniteAndBadShape) {
  EXPECT_ERROR_KIND(DenseMatrix(1, 2, {1.0, std::nan("")}), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), ErrorKind::invalid_argument);
}

// ---- det --------------------------------------------------------------------------------

TEST(Det, Identity) { EXPECT_EQ(det(DenseMatrix::identity(3)), 1.0); }

TEST(Det, Triangular) { EXPECT_EQ(det(DenseMatrix::from_rows({{1, 1}, {0, 1}})), 1.0); }

TEST(Det, RandomFiveByFiveMatchesCofactorOracle) {
  oracle::Gen gen(101);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = gen.matrix(5, 5);
    const double expected = oracle::cofactor_det(a);
    EXPECT_LE(std::abs(det(to_dense(a)) - expected), 1e-12 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Det, RandomSmallSizesMatchCofactorOracle) {
  oracle::Gen gen(102);
  for (int n = 0; n <= 6; ++n)
    for (int trial = 0; trial < 30; ++trial) {
      const auto a = gen.matrix(n, n);
      const double expected = oracle::cofactor_det(a);
      EXPECT_LE(std::abs(det(to_dense(a)) - expected), 1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST(Det, EmptyMatrixIsOne) { EXPECT_EQ(det(DenseMatrix(0, 0)), 1.0); }

TEST(Det, NonSquareRejected) { EXPECT_ERROR_KIND(det(DenseMatrix(2, 3)), ErrorKind::invalid_argument); }

TEST(Det, PermutationMatricesExact) {
  for (int n = 1; n <= 6; ++n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      DenseMatrix p(n, n);
      for (int i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
      int inversions = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (perm[static_cast<std::size_t>(i)] > perm[static_cast<std::size_t>(j)]) ++inversions;
      EXPECT_EQ(det(p), inversions % 2 == 0 ? 1.0 : -1.0);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST(Det, LargePermutationsExact) {
  oracle::Gen gen(103);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = gen.integer(7, 20);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen.engine());
    DenseMatrix p(n, n);
    for (int i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
    // Parity from cycle decomposition.
    std::vector<bool> seen(static_cast<std::size_t>(n));
    int transpositions = 0;
    for (int i = 0; i < n; ++i) {
      if (seen[static_cast<std::size_t>(i)]) continue;
      int len = 0;
      for (int j = i; !seen[static_cast<std::size_t>(j)]; j = perm[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        ++len;
      }
      transpositions += len - 1;
    }
    EXPECT_EQ(det(p), transpositions % 2 == 0 ? 1.0 : -1.0);
  }
}

// ---- minor ----------------------------------------------------------------------------

TEST(Minor, Examples) {
  const auto a = DenseMatrix::from_rows({{1, 0, 0}, {0, 1, 0}});
  EXPECT_EQ(minor(a, IndexSubset({0, 1}, 3)), 1.0);
  EXPECT_EQ(minor(a, IndexSubset({1, 2}, 3)), 0.0);
  EXPECT_EQ(minor(DenseMatrix::from_rows({{1, 1, 0}, {0, 1, 1}}), IndexSubset({0, 2}, 3)), 1.0);
}

TEST(Minor, SizeMismatchRejected) {
  const auto a = DenseMatrix::from_rows({{1, 0, 0}, {0, 1, 0}});
  EXPECT_ERROR_KIND(minor(a, IndexSubset({0}, 3)), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(minor(a, IndexSubset({0, 1}, 4)), ErrorKind::invalid_argument);
}

TEST(Minor, MultilinearInRows) {
  oracle::Gen gen(104);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = gen.integer(1, 8);
    const int k = gen.integer(1, n);
    const auto a = to_dense(gen.matrix(k, n));
    const int row = gen.integer(0, k - 1);
    const double c = gen.uniform(-5.0, 5.0);
    for (const auto& s : enumerate_subsets(n, k)) {
      const double base = minor(a, s);
      EXPECT_NEAR(minor(a.scaled_row(row, c), s), c * base, 1e-12 * std::max(1.0, std::abs(c * base)));
    }
  }
}

// ---- cauchy_binet_check -------------------------------------------------------------

TEST(CauchyBinet, Examples) {
  const auto p1 = cauchy_binet_check(DenseMatrix::from_rows({{1, 0, 0}, {0, 1, 0}}));
  EXPECT_EQ(p1.lhs, 1.0);
  EXPECT_EQ(p1.rhs, 1.0);
  const auto p2 = cauchy_binet_check(DenseMatrix::from_rows({{1, 1, 0}, {0, 1, 1}}));
  EXPECT_NEAR(p2.lhs, 3.0, 1e-14);
  EXPECT_NEAR(p2.rhs, 3.0, 1e-14);
}

TEST(CauchyBinet, RandomThreeBySix) {
  oracle::Gen gen(105);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = gen.matrix(3, 6);
    const auto p = cauchy_binet_check(to_dense(a));
    EXPECT_LE(std::abs(p.lhs - p.rhs), 1e-10 * std::max(1.0, std::abs(p.lhs)));
    EXPECT_LE(oracle::rel(p.rhs, oracle::weighted_minor_sum(a)), 1e-10);
  }
}

TEST(CauchyBinet, WideRejected) {
  EXPECT_ERROR_KIND(cauchy_binet_check(DenseMatrix(3, 2)), ErrorKind::invalid_argument);
}

TEST(CauchyBinet, PropertyThousandInstances) {
  oracle::Gen gen(106);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = gen.integer(1, 10);
    const int k = gen.integer(1, n);
    const auto p = cauchy_binet_check(to_dense(gen.matrix(k, n)));
    EXPECT_LE(relative_gap(p.lhs, p.rhs), 1e-9) << k << "x" << n;
  }
}

// ---- weighted_minor_expansion --------------------------------------------------------

TEST(WeightedExpansion, IdentityGivesWeightProduct) {
  const std::vector<double> w{4.0, 9.0};
  EXPECT_EQ(weighted_minor_expansion(DenseMatrix::identity(2), w), 36.0);
}

TEST(WeightedExpansion, OneRowWitnessAgainstFullProductForm) {
  const auto b = DenseMatrix::from_rows({{1, 1, 0}});
  oracle::Gen gen(107);
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = gen.positive(3);
    const double got = weighted_minor_expansion(b, w);
    EXPECT_NEAR(got, w[0] + w[1], 1e-14 * (w[0] + w[1]));
  }
  const std::vector<double> w{2.0, 3.0, 5.0};
  const double full_product_form = w[0] * w[1] * w[2] * cauchy_binet_check(b).rhs;
  EXPECT_EQ(full_product_form, 60.0);
  EXPECT_EQ(weighted_minor_expansion(b, w), 5.0);
}

TEST(WeightedExpansion, RandomTwoByFourMatchesDirectGram) {
  oracle::Gen gen(108);
  for (int trial = 0; trial < 100; ++trial) {
    const auto b = gen.matrix(2, 4);
    const auto w = gen.positive(4);
    const double direct = oracle::cofactor_det(oracle::weighted_gram(b, w));
    EXPECT_LE(std::abs(weighted_minor_expansion(to_dense(b), w) - direct), 1e-10 * std::max(1.0, std::abs(direct)));
  }
}

TEST(WeightedExpansion, NonPositiveWeightRejected) {
  const auto b = DenseMatrix::from_rows({{1, 1, 0}});
  EXPECT_ERROR_KIND(weighted_minor_expansion(b, std::vector<double>{1.0, 0.0, 1.0}), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(weighted_minor_expansion(b, std::vector<double>{1.0, -2.0, 1.0}), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(weighted_minor_expansion(b, std::vector<double>{1.0, 1.0}), ErrorKind::invalid_argument);
}

TEST(WeightedExpansion, PropertyThousandInstances) {
  oracle::Gen gen(109);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = gen.integer(1, 10);
    const int k = gen.integer(1, n);
    const auto b = gen.matrix(k, n);
    const auto w = gen.positive(n);
    const double expansion = weighted_minor_expansion(to_dense(b), w);
    EXPECT_LE(relative_gap(det(weighted_gram(to_dense(b), w)), expansion), 1e-9);
    if (n <= 7) {
      EXPECT_LE(oracle::rel(oracle::weighted_minor_sum(b, w), expansion), 1e-9);
    }
  }
}

TEST(WeightedExpansion, UnitWeightsReproduceCauchyBinetExactly) {
  oracle::Gen gen(110);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = gen.integer(1, 10);
    const int k = gen.integer(1, n);
    const auto b = to_dense(gen.matrix(k, n));
    const std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
    EXPECT_EQ(weighted_minor_expansion(b, ones), cauchy_binet_check(b).rhs);
  }
}

// ---- helpers ------------------------------------------------------------------------------

TEST(Gram, WeightedGramMatchesOracle) {
  oracle::Gen gen(111);
  const auto b = gen.matrix(3, 5);
  const auto w = gen.positive(5);
  const auto g = weighted_gram(to_dense(b), w);
  const auto o = oracle::weighted_gram(b, w);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(g(i, j), o[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 1e-13);
  EXPECT_ERROR_KIND(weighted_gram(to_dense(b), std::vector<double>{1.0}), ErrorKind::invalid_argument);
}

TEST(Cholesky, FactorsAndSolves) {
  oracle::Gen gen(112);
  const auto a = to_dense(gen.matrix(4, 4));
  const auto spd = gram(a);
  const auto l = cholesky(spd);
  const auto back = l * l.transposed();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(back(i, j), spd(i, j), 1e-12 * std::max(1.0, std::abs(spd(i, j))));
      if (j > i) {
        EXPECT_EQ(l(i, j), 0.0);
      }
    }
  const std::vector<double> rhs{1.0, -2.0, 0.5, 3.0};
  const auto y = forward_substitute(l, rhs);
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += l(i, j) * y[static_cast<std::size_t>(j)];
    EXPECT_NEAR(s, rhs[static_cast<std::size_t>(i)], 1e-12);
  }
}

TEST(Cholesky, IndefiniteRejected) {
  EXPECT_ERROR_KIND(cholesky(DenseMatrix::from_rows({{1, 2}, {2, 1}})), ErrorKind::numerical_degeneracy);
}

TEST(ProjectCoordinates, RecoversCombination) {
  const auto basis = DenseMatrix::from_rows({{1, 0, 1}, {0, 1, 1}});
  const std::vector<double> v{2.0, -3.0, -1.0};
  double residual = -1.0;
  const auto y = project_coordinates(basis, v, &residual);
  EXPECT_NEAR(y[0], 2.0, 1e-13);
  EXPECT_NEAR(y[1], -3.0, 1e-13);
  EXPECT_NEAR(residual, 0.0, 1e-13);
  project_coordinates(basis, std::vector<double>{0.0, 0.0, 1.0}, &residual);
  EXPECT_GT(residual, 0.1);
}
