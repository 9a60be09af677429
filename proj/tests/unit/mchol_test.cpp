#include <enkfmc/errors.hpp>
#include <enkfmc/mchol.hpp>
#include <enkfmc/precision.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace enkfmc {
namespace {

using testing::rel_diff;

IndexList iota(Index n) {
  IndexList out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

Matrix sample_covariance(const Matrix& u) {
  return u * u.transpose() / static_cast<double>(u.cols() - 1);
}

TEST(RegressionSolve, ExactCollinearity) {
  Matrix p(1, 5);
  p << 1, -2, 0.5, 3, -2.5;
  const Vector c = regression_solve(p, 3.0 * p.row(0).transpose());
  ASSERT_EQ(c.size(), 1);
  EXPECT_NEAR(c[0], 3.0, 1e-13);
}

TEST(RegressionSolve, OrthogonalTargetGivesZero) {
  Matrix p(2, 4);
  p << 1, 0, 0, 0,
       0, 1, 0, 0;
  Vector t(4);
  t << 0, 0, 1, -1;
  EXPECT_LE(regression_solve(p, t).norm(), 1e-15);
}

TEST(RegressionSolve, DuplicatedRowGivesMinimumNorm) {
  Matrix p(2, 4);
  p << 1, -1, 2, -2,
       1, -1, 2, -2;
  const Vector c = regression_solve(p, p.row(0).transpose());
  EXPECT_NEAR(c[0], 0.5, 1e-12);
  EXPECT_NEAR(c[1], 0.5, 1e-12);
}

TEST(RegressionSolve, MatchesNormalEquationsWhenWellPosed) {
  std::mt19937_64 rng(8);
  const Matrix p = testing::random_matrix(rng, 4, 30);
  const Vector t = testing::random_matrix(rng, 30, 1);
  const Matrix a = p * p.transpose();
  const Vector expect = a.inverse() * (p * t);
  EXPECT_LE(rel_diff(regression_solve(p, t), expect), 1e-10);
}

TEST(Perturbations, RowsSumToZero) {
  std::mt19937_64 rng(9);
  const Matrix x = testing::random_matrix(rng, 6, 11, 5.0);
  const Matrix u = perturbations(x);
  for (Index i = 0; i < u.rows(); ++i) EXPECT_LE(std::abs(u.row(i).sum()), 1e-10 * x.row(i).norm());
}

TEST(FitFactors, ZetaZeroIsDiagonalSampleVariance) {
  std::mt19937_64 rng(10);
  const auto g = GridGeometry::grid(3, 3);
  const Matrix u = testing::centered(testing::random_matrix(rng, 9, 7));
  const auto f = fit_factors(u, g, iota(9), 0);
  EXPECT_EQ(f.nnz(), 0);
  const Vector var = sample_covariance(u).diagonal();
  EXPECT_LE(rel_diff(f.d(), var), 1e-14);
}

TEST(FitFactors, ExactRegressionIsFloored) {
  // two-component ring, x2 = 2 x1
  Matrix u(2, 3);
  u << 1, 0, -1,
       2, 0, -2;
  const auto f = fit_factors(u, GridGeometry::ring(2), {0, 1}, 1);
  ASSERT_EQ(f.row_cols(1).size(), 1u);
  EXPECT_NEAR(f.row_values(1)[0], -2.0, 1e-13);
  EXPECT_NEAR(f.d()[0], 1.0, 1e-15);
  EXPECT_EQ(f.d()[1], kVarianceFloor);
}

TEST(FitFactors, DenseLimitReproducesSampleCovariance) {
  std::mt19937_64 rng(12);
  for (Index side : {2, 3, 4}) {
    const auto g = GridGeometry::grid(side, side);
    const Index n = g.nstate();
    const Matrix u = testing::centered(testing::random_matrix(rng, n, 64));
    const auto f = fit_factors(u, g, iota(n), side);
    EXPECT_LE(rel_diff(testing::covariance_oracle(f), sample_covariance(u)), 1e-8);
  }
}

TEST(FitFactors, PatternEqualsPredecessors) {
  std::mt19937_64 rng(13);
  const auto g = GridGeometry::grid(5, 4, Ordering::column_major, Boundary::periodic);
  const Matrix u = testing::centered(testing::random_matrix(rng, 20, 6));
  const auto f = fit_factors(u, g, iota(20), 1);
  for (Index j = 0; j < 20; ++j) {
    const auto c = f.row_cols(j);
    EXPECT_EQ(IndexList(c.begin(), c.end()), predecessors(g, j, 1));
  }
}

TEST(FitFactors, LocalOrderMapsGlobalPredecessors) {
  std::mt19937_64 rng(14);
  const auto g = GridGeometry::grid(6, 6);
  const auto subs = decompose(g, 4, 1);
  const auto& sd = subs[3];
  const Index n = static_cast<Index>(sd.local_order.size());
  const Matrix u = testing::centered(testing::random_matrix(rng, n, 10));
  const auto f = fit_factors(u, g, sd.local_order, 1);
  for (Index r = 0; r < n; ++r) {
    const Index global = sd.local_order[static_cast<std::size_t>(r)];
    IndexList expect;
    for (Index q : predecessors(g, global, 1)) {
      const auto it = std::lower_bound(sd.local_order.begin(), sd.local_order.end(), q);
      if (it != sd.local_order.end() && *it == q) expect.push_back(it - sd.local_order.begin());
    }
    const auto c = f.row_cols(r);
    EXPECT_EQ(IndexList(c.begin(), c.end()), expect);
  }
}

TEST(FitFactors, ScaleEquivariance) {
  std::mt19937_64 rng(15);
  const auto g = GridGeometry::ring(12);
  const Matrix u = testing::centered(testing::random_matrix(rng, 12, 8));
  const auto f1 = fit_factors(u, g, iota(12), 2);
  const auto f2 = fit_factors(-3.5 * u, g, iota(12), 2);
  ASSERT_EQ(f1.nnz(), f2.nnz());
  for (Index k = 0; k < f1.nnz(); ++k) {
    EXPECT_NEAR(f1.values()[static_cast<std::size_t>(k)], f2.values()[static_cast<std::size_t>(k)],
                1e-10 * (1.0 + std::abs(f1.values()[static_cast<std::size_t>(k)])));
  }
  EXPECT_LE(rel_diff(f2.d(), 3.5 * 3.5 * f1.d()), 1e-10);
}

TEST(FitFactors, Deterministic) {
  std::mt19937_64 rng(16);
  const auto g = GridGeometry::grid(4, 5);
  const Matrix u = testing::centered(testing::random_matrix(rng, 20, 5));
  const auto a = fit_factors(u, g, iota(20), 2);
  const auto b = fit_factors(u, g, iota(20), 2);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_EQ(a.d(), b.d());
}

TEST(FitFactors, RankDeficientEnsembleStaysFinite) {
  std::mt19937_64 rng(17);
  const auto g = GridGeometry::grid(5, 5);
  const Matrix u = testing::centered(testing::random_matrix(rng, 25, 3));
  const auto f = fit_factors(u, g, iota(25), 2);
  EXPECT_TRUE(f.d().allFinite());
  EXPECT_GE(f.d().minCoeff(), kVarianceFloor);
  for (double v : f.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(FitFactors, Errors) {
  const auto g = GridGeometry::ring(4);
  EXPECT_THROW(fit_factors(Matrix::Zero(4, 1), g, iota(4), 1), ConfigError);
  EXPECT_THROW(fit_factors(Matrix::Zero(3, 4), g, iota(4), 1), DomainError);
  EXPECT_THROW(fit_factors(Matrix::Zero(2, 4), g, {2, 1}, 1), DomainError);
}

}  // namespace
}  // namespace enkfmc
