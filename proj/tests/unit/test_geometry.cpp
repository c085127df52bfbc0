#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bridge.hpp"
#include "geometry.hpp"

using namespace neckcalib;
using linalg::DenseMatrix;

namespace {

ChartGeometry circle_chart(JacobianMode mode = JacobianMode::analytic) {
  ChartGeometry c;
  c.components = {{{1.0, {{ChartFactor::Fn::cos, 0, 1}}}}, {{1.0, {{ChartFactor::Fn::sin, 0, 1}}}}};
  c.lo = {-3.0};
  c.hi = {3.0};
  c.jacobian = mode;
  return c;
}

// (u, v) -> (u, v, u^2 + v^2)
ChartGeometry paraboloid_chart(JacobianMode mode = JacobianMode::analytic) {
  ChartGeometry c;
  c.components = {{{1.0, {{ChartFactor::Fn::pow, 0, 1}}}},
                  {{1.0, {{ChartFactor::Fn::pow, 1, 1}}}},
                  {{1.0, {{ChartFactor::Fn::pow, 0, 2}}}, {1.0, {{ChartFactor::Fn::pow, 1, 2}}}}};
  c.lo = {-1.0, -1.0};
  c.hi = {1.0, 1.0};
  c.jacobian = mode;
  return c;
}

double det_with_point(const Vec& p, const DenseMatrix& b) {
  oracle::Mat m;
  m.push_back(p);
  for (int i = 0; i < b.rows(); ++i) m.emplace_back(b.row(i).begin(), b.row(i).end());
  return oracle::eigen_det(m);
}

DenseMatrix swap_rows(const DenseMatrix& m, int a, int b) {
  DenseMatrix out = m;
  for (int c = 0; c < m.cols(); ++c) {
    out(a, c) = m(b, c);
    out(b, c) = m(a, c);
  }
  return out;
}

}  // namespace

// ---- sphere_point ---------------------------------------------------------------------

TEST(SpherePoint, ReproducibleForFixedSeed) {
  CounterRng a = stream_for(5, 0), b = stream_for(5, 0);
  EXPECT_EQ(sphere_point(2, a), sphere_point(2, b));
}

TEST(SpherePoint, UnitNorm) {
  CounterRng rng(11);
  for (int n = 2; n <= 7; ++n)
    for (int i = 0; i < 1000; ++i) {
      const Vec p = sphere_point(n, rng);
      double s = 0.0;
      for (double x : p) s += x * x;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(SpherePoint, EmpiricalMeanNearOrigin) {
  CounterRng rng(12);
  Vec mean(3, 0.0);
  for (int i = 0; i < 10000; ++i) {
    const Vec p = sphere_point(3, rng);
    for (int j = 0; j < 3; ++j) mean[static_cast<std::size_t>(j)] += p[static_cast<std::size_t>(j)] / 10000.0;
  }
  EXPECT_LT(std::sqrt(mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]), 0.05);
}

TEST(SpherePoint, RejectsLowDimension) {
  CounterRng rng(1);
  EXPECT_ERROR_KIND(sphere_point(1, rng), ErrorKind::invalid_argument);
  EXPECT_ERROR_KIND(Geometry::sphere(1), ErrorKind::invalid_argument);
}

// ---- tangent_basis --------------------------------------------------------------------

TEST(TangentBasis, CircleAtEastPole) {
  const auto b = tangent_basis(Geometry::sphere(2), Vec{1.0, 0.0});
  ASSERT_EQ(b.vectors.rows(), 1);
  EXPECT_EQ(b.vectors(0, 0), 0.0);
  EXPECT_EQ(b.vectors(0, 1), 1.0);
  EXPECT_EQ(b.orientation, 1);
  EXPECT_GT(det_with_point({1.0, 0.0}, b.vectors), 0.0);
}

TEST(TangentBasis, TwoSphereNorthPoleSpansEquatorialPlane) {
  const Vec p{0.0, 0.0, 1.0};
  const auto b = tangent_basis(Geometry::sphere(3), p);
  ASSERT_EQ(b.vectors.rows(), 2);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(b.vectors(i, 2), 0.0, 1e-12);
    EXPECT_NEAR(linalg::norm(b.vectors.row(i)), 1.0, 1e-12);
  }
  EXPECT_GT(det_with_point(p, b.vectors), 0.0);
}

TEST(TangentBasis, SphereBasisOrthonormalAndOutwardFirst) {
  CounterRng rng(13);
  for (int n = 2; n <= 7; ++n)
    for (int trial = 0; trial < 200; ++trial) {
      const Vec p = sphere_point(n, rng);
      const auto b = tangent_basis(Geometry::sphere(n), p);
      ASSERT_EQ(b.vectors.rows(), n - 1);
      for (int i = 0; i < n - 1; ++i) {
        EXPECT_NEAR(linalg::dot(b.vectors.row(i), p), 0.0, 1e-12);
        for (int j = 0; j < n - 1; ++j)
          EXPECT_NEAR(linalg::dot(b.vectors.row(i), b.vectors.row(j)), i == j ? 1.0 : 0.0, 1e-12);
      }
      EXPECT_NEAR(det_with_point(p, b.vectors), 1.0, 1e-10);
    }
}

TEST(TangentBasis, OffSphereRejected) {
  EXPECT_ERROR_KIND(tangent_basis(Geometry::sphere(2), Vec{1.1, 0.0}), ErrorKind::domain);
}

TEST(TangentBasis, CircleChartAtZero) {
  for (auto mode : {JacobianMode::analytic, JacobianMode::finite_difference}) {
    const Geometry g = Geometry::immersed_chart(circle_chart(mode));
    const auto b = tangent_basis(g, Vec{1.0, 0.0});
    ASSERT_EQ(b.vectors.rows(), 1);
    EXPECT_NEAR(b.vectors(0, 0), 0.0, 1e-9);
    EXPECT_NEAR(b.vectors(0, 1), 1.0, 1e-9);
  }
}

TEST(TangentBasis, ChartJacobianRowsInChartOrder) {
  const Geometry g = Geometry::immersed_chart(paraboloid_chart());
  const Vec p = g.chart_map(Vec{0.3, -0.4});
  const auto b = tangent_basis(g, p);
  EXPECT_NEAR(b.vectors(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(b.vectors(0, 2), 0.6, 1e-9);
  EXPECT_NEAR(b.vectors(1, 1), 1.0, 1e-12);
  EXPECT_NEAR(b.vectors(1, 2), -0.8, 1e-9);
}

TEST(Chart, FiniteDifferenceMatchesAnalytic) {
  const Geometry a = Geometry::immersed_chart(paraboloid_chart(JacobianMode::analytic));
  const Geometry f = Geometry::immersed_chart(paraboloid_chart(JacobianMode::finite_difference));
  oracle::Gen gen(14);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec u{gen.uniform(-1, 1), gen.uniform(-1, 1)};
    const auto ja = a.chart_jacobian(u);
    const auto jf = f.chart_jacobian(u);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(ja(i, j), jf(i, j), 1e-8);
  }
}

TEST(Chart, RankDeficientChartRejected) {
  ChartGeometry c;
  // Both coordinates depend on u only: rank 1 for a 2-parameter chart.
  c.components = {{{1.0, {{ChartFactor::Fn::pow, 0, 1}}}}, {{2.0, {{ChartFactor::Fn::pow, 0, 1}}}}, {}};
  c.lo = {-1.0, -1.0};
  c.hi = {1.0, 1.0};
  EXPECT_ERROR_KIND(Geometry::immersed_chart(c), ErrorKind::spec_violation);
}

TEST(Chart, MalformedTablesRejected) {
  ChartGeometry c = circle_chart();
  c.components[0][0].factors[0].var = 3;
  EXPECT_ERROR_KIND(Geometry::immersed_chart(c), ErrorKind::invalid_argument);
  c = circle_chart();
  c.lo = {1.0};
  c.hi = {0.0};
  EXPECT_ERROR_KIND(Geometry::immersed_chart(c), ErrorKind::invalid_argument);
}

TEST(Chart, PreimageAndMembership) {
  const Geometry g = Geometry::immersed_chart(circle_chart());
  const Vec u = g.chart_preimage(Vec{std::cos(1.2), std::sin(1.2)});
  EXPECT_NEAR(u[0], 1.2, 1e-9);
  EXPECT_TRUE(g.contains(Vec{0.0, 1.0}));
  EXPECT_FALSE(g.contains(Vec{0.0, 1.1}));
  EXPECT_ERROR_KIND(g.chart_preimage(Vec{0.5, 0.5}), ErrorKind::domain);
}

TEST(Chart, SamplesLieOnImage) {
  const Geometry g = Geometry::immersed_chart(paraboloid_chart());
  CounterRng rng(15);
  for (int i = 0; i < 100; ++i) {
    const Vec p = g.sample_point(rng);
    EXPECT_NEAR(p[2], p[0] * p[0] + p[1] * p[1], 1e-14);
    EXPECT_TRUE(g.contains(p));
  }
}

// ---- orientation_sign ---------------------------------------------------------------------

TEST(OrientationSign, BasisItselfPositive) {
  const Geometry g = Geometry::sphere(3);
  const Vec p{0.0, 0.6, 0.8};
  const auto b = tangent_basis(g, p);
  EXPECT_EQ(orientation_sign(g, p, b.vectors), 1);
}

TEST(OrientationSign, SwapNegates) {
  const Geometry g = Geometry::sphere(3);
  const Vec p{0.0, 0.6, 0.8};
  const auto b = tangent_basis(g, p);
  EXPECT_EQ(orientation_sign(g, p, swap_rows(b.vectors, 0, 1)), -1);
}

TEST(OrientationSign, DependentIsZero) {
  const Geometry g = Geometry::sphere(3);
  const Vec p{0.0, 0.0, 1.0};
  const auto b = tangent_basis(g, p);
  DenseMatrix dep(2, 3);
  for (int c = 0; c < 3; ++c) {
    dep(0, c) = b.vectors(0, c);
    dep(1, c) = 2.0 * b.vectors(0, c);
  }
  EXPECT_EQ(orientation_sign(g, p, dep), 0);
}

TEST(OrientationSign, NonTangentRejected) {
  const Geometry g = Geometry::sphere(3);
  const Vec p{0.0, 0.0, 1.0};
  const auto bad = DenseMatrix::from_rows({{1, 0, 0}, {0, 1, 1e-3}});
  EXPECT_ERROR_KIND(orientation_sign(g, p, bad), ErrorKind::invalid_argument);
  const auto tiny = DenseMatrix::from_rows({{1, 0, 0}, {0, 1, 1e-10}});
  EXPECT_EQ(orientation_sign(g, p, tiny), 1);
}

TEST(OrientationSign, AntisymmetricAndScaleInvariant) {
  oracle::Gen gen(16);
  CounterRng rng(17);
  for (int n = 3; n <= 6; ++n) {
    const Geometry g = Geometry::sphere(n);
    for (int trial = 0; trial < 100; ++trial) {
      const Vec p = sphere_point(n, rng);
      const auto b = tangent_basis(g, p);
      // Random tangent frame: random combinations of the basis.
      DenseMatrix v(n - 1, n);
      for (int i = 0; i < n - 1; ++i) {
        for (int l = 0; l < n - 1; ++l) {
          const double c = gen.normal();
          for (int col = 0; col < n; ++col) v(i, col) += c * b.vectors(l, col);
        }
      }
      const int s = orientation_sign(g, p, v);
      ASSERT_NE(s, 0);
      EXPECT_EQ(orientation_sign(g, p, swap_rows(v, 0, n - 2)), -s);
      EXPECT_EQ(orientation_sign(g, p, v.scaled_row(gen.integer(0, n - 2), gen.uniform(0.01, 100.0))), s);
      // Outward-normal-first rule: sign det[p | v] in R^n.
      EXPECT_EQ(det_with_point(p, v) > 0.0 ? 1 : -1, s);
    }
  }
}
