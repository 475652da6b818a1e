#include <gtest/gtest.h>
#include <algorithm>

#include "support.hpp"

using namespace curvlam;
using namespace curvlam::testing;

TEST(Geometry, ParseAndCurvature) {
  EXPECT_EQ(parse_space("flat"), SpaceKind::Flat);
  EXPECT_EQ(parse_space("sphere"), SpaceKind::Sphere);
  EXPECT_EQ(parse_space("hyperbolic"), SpaceKind::Hyperbolic);
  EXPECT_THROW(parse_space("torus"), Error);
  EXPECT_EQ(curvature(SpaceKind::Flat), 0);
  EXPECT_EQ(curvature(SpaceKind::Sphere), 1);
  EXPECT_EQ(curvature(SpaceKind::Hyperbolic), -1);
  for (SpaceKind s : all_spaces()) EXPECT_EQ(parse_space(to_string(s)), s);
}

TEST(Geometry, GammaExamples) {
  EXPECT_DOUBLE_EQ(gamma(SpaceKind::Sphere, {0, 0}), 1.0);
  EXPECT_NEAR(gamma(SpaceKind::Sphere, {1, 0}), 0.70710678118654752, 1e-15);
  EXPECT_NEAR(gamma(SpaceKind::Hyperbolic, {0.5, 0}), 1.1547005383792515, 1e-15);
  EXPECT_DOUBLE_EQ(gamma(SpaceKind::Flat, {3, 4}), 1.0);
  EXPECT_THROW(gamma(SpaceKind::Hyperbolic, {1.0, 0}), DomainError);
  EXPECT_THROW(gamma(SpaceKind::Hyperbolic, {0.8, 0.8}), DomainError);
}

TEST(Geometry, MetricExamples) {
  EXPECT_TRUE(metric(SpaceKind::Flat, {0.3, -2}).isApprox(Mat2::Identity()));
  EXPECT_TRUE(metric(SpaceKind::Sphere, {0, 0}).isApprox(Mat2::Identity()));
  Mat2 expected;
  expected << 0.25, 0.0, 0.0, 0.5;
  EXPECT_LT((metric(SpaceKind::Sphere, {1, 0}) - expected).norm(), 1e-15);
}

TEST(Geometry, ChartToAmbientExamples) {
  EXPECT_LT((chart_to_ambient(SpaceKind::Sphere, {0, 0}) - Vec3(0, 0, 1)).norm(), 1e-15);
  const double h = std::sqrt(0.5);
  EXPECT_LT((chart_to_ambient(SpaceKind::Sphere, {1, 0}) - Vec3(h, 0, h)).norm(), 1e-15);
  EXPECT_LT((chart_to_ambient(SpaceKind::Hyperbolic, {0.5, 0}) -
             Vec3(0.57735026918962576, 0, 1.1547005383792515))
                .norm(),
            1e-15);
  EXPECT_EQ(chart_to_ambient(SpaceKind::Flat, {2, 3}), Vec3(2, 3, 1));
}

TEST(Geometry, AmbientToChartRejectsLowerHemisphere) {
  EXPECT_THROW(ambient_to_chart(SpaceKind::Sphere, Vec3(0.6, 0, -0.8)), DomainError);
  EXPECT_THROW(ambient_to_chart(SpaceKind::Sphere, Vec3(1, 0, 0)), DomainError);
}

TEST(Geometry, RoundTripAndQuadric) {
  std::mt19937_64 rng(11);
  for (SpaceKind space : {SpaceKind::Sphere, SpaceKind::Hyperbolic}) {
    for (int i = 0; i < 1000; ++i) {
      const ChartPoint p = random_point(rng, 0.0, space == SpaceKind::Hyperbolic ? 0.95 : 3.0);
      const AmbientPoint u = chart_to_ambient(space, p);
      EXPECT_LT(std::abs(quadric_residual(space, u)), 1e-12);
      EXPECT_GT(u.z(), 0.0);
      EXPECT_LT((ambient_to_chart(space, u) - p).norm(), 1e-12 * std::max(1.0, p.norm()));
    }
  }
}

// Kinetic energy from the chart metric against the ambient speed of the
// pushed-forward curve, obtained by differentiating chart_to_ambient.
TEST(Geometry, MetricMatchesAmbientSpeed) {
  std::mt19937_64 rng(12);
  for (SpaceKind space : all_spaces()) {
    for (int i = 0; i < 200; ++i) {
      const ChartPoint p = random_point(rng, space);
      const Vec2 v = random_vector(rng);
      const double h = 1e-6;
      const Vec3 du =
          (chart_to_ambient(space, p + h * v) - chart_to_ambient(space, p - h * v)) / (2 * h);
      const double direct = ambient_dot(space, du, du);
      const double via_metric = v.dot(metric(space, p) * v);
      EXPECT_NEAR(via_metric, direct, 1e-8 * std::max(1.0, direct));
    }
  }
}

TEST(Geometry, PushForwardIsExact) {
  std::mt19937_64 rng(13);
  for (SpaceKind space : all_spaces()) {
    for (int i = 0; i < 200; ++i) {
      const ChartPoint p = random_point(rng, space);
      const Vec2 v = random_vector(rng);
      const Vec3 u = chart_to_ambient(space, p);
      const Vec3 du = chart_velocity_to_ambient(space, p, v);
      EXPECT_NEAR(v.dot(metric(space, p) * v), ambient_dot(space, du, du),
                  1e-12 * std::max(1.0, du.squaredNorm()));
      EXPECT_LT(std::abs(tangency_residual(space, u, du)), 1e-12 * std::max(1.0, du.norm()));
      EXPECT_LT((ambient_velocity_to_chart(space, u, du) - v).norm(), 1e-12 * std::max(1.0, v.norm()));
    }
  }
}

TEST(Geometry, MetricInverse) {
  std::mt19937_64 rng(14);
  for (SpaceKind space : all_spaces()) {
    for (int i = 0; i < 200; ++i) {
      const ChartPoint q = random_point(rng, space);
      const double g = gamma(space, q);
      const Mat2 expected =
          (Mat2::Identity() + curvature(space) * q * q.transpose()) / (g * g);
      const Mat2 inv = metric_inverse(space, q);
      EXPECT_LT((inv - expected).norm(), 1e-12 * expected.norm());
      EXPECT_LT((inv * metric(space, q) - Mat2::Identity()).norm(), 1e-12);
    }
  }
}

TEST(Geometry, MetricIsPositiveDefinite) {
  std::mt19937_64 rng(15);
  for (SpaceKind space : all_spaces()) {
    for (int i = 0; i < 100; ++i) {
      const Eigen::SelfAdjointEigenSolver<Mat2> eig(metric(space, random_point(rng, space)));
      EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(Geometry, DistanceExamples) {
  const double pi = kPi;
  EXPECT_NEAR(geodesic_distance(SpaceKind::Sphere, ChartPoint(0, 0), ChartPoint(1, 0)), pi / 4, 1e-15);
  EXPECT_NEAR(geodesic_distance(SpaceKind::Sphere, ChartPoint(1, 0), ChartPoint(0, 1)), pi / 3, 1e-15);
  EXPECT_NEAR(geodesic_distance(SpaceKind::Hyperbolic, ChartPoint(0, 0), ChartPoint(0.5, 0)),
              0.54930614433405485, 1e-15);
  EXPECT_NEAR(geodesic_distance(SpaceKind::Flat, ChartPoint(1, 1), ChartPoint(4, 5)), 5.0, 1e-15);
  EXPECT_DOUBLE_EQ(radial_distance(SpaceKind::Flat, ChartPoint(3, 4)), 5.0);
  EXPECT_NEAR(radial_distance(SpaceKind::Sphere, ChartPoint(1, 0)), pi / 4, 1e-15);
  EXPECT_NEAR(radial_distance(SpaceKind::Hyperbolic, ChartPoint(0.5, 0)), 0.54930614433405485, 1e-15);
}

TEST(Geometry, AntipodeExamples) {
  EXPECT_EQ(antipode_reflect({1, 0}), ChartPoint(-1, 0));
  EXPECT_EQ(antipode_reflect({0, 0}), ChartPoint(0, 0));
  EXPECT_EQ(antipode_reflect({0.3, -0.2}), ChartPoint(-0.3, 0.2));
}

TEST(Geometry, DistanceAgainstClosedForms) {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 200; ++i) {
    const ChartPoint a = random_point(rng, SpaceKind::Sphere);
    const ChartPoint b = random_point(rng, SpaceKind::Sphere);
    const double c = (1 + a.dot(b)) / std::sqrt((1 + a.squaredNorm()) * (1 + b.squaredNorm()));
    EXPECT_NEAR(geodesic_distance(SpaceKind::Sphere, a, b), std::acos(std::clamp(c, -1.0, 1.0)), 1e-7);
    const ChartPoint p = random_point(rng, SpaceKind::Hyperbolic);
    const ChartPoint q = random_point(rng, SpaceKind::Hyperbolic);
    const double ch = (1 - p.dot(q)) / std::sqrt((1 - p.squaredNorm()) * (1 - q.squaredNorm()));
    EXPECT_NEAR(geodesic_distance(SpaceKind::Hyperbolic, p, q), std::acosh(std::max(1.0, ch)), 1e-7);
  }
}

TEST(Geometry, DistanceProperties) {
  std::mt19937_64 rng(17);
  for (SpaceKind space : all_spaces()) {
    for (int i = 0; i < 200; ++i) {
      const ChartPoint a = random_point(rng, space);
      const ChartPoint b = random_point(rng, space);
      const ChartPoint c = random_point(rng, space);
      const double ab = geodesic_distance(space, a, b);
      EXPECT_EQ(ab, geodesic_distance(space, b, a));
      EXPECT_EQ(geodesic_distance(space, a, a), 0.0);
      EXPECT_LE(ab, geodesic_distance(space, a, c) + geodesic_distance(space, c, b) + 1e-12);
      EXPECT_GT(ab, 0.0);
      EXPECT_NEAR(ab,
                  geodesic_distance(space, chart_to_ambient(space, a), chart_to_ambient(space, b)),
                  1e-14);
      EXPECT_NEAR(radial_distance(space, a), geodesic_distance(space, ChartPoint(0, 0), a), 1e-14);
    }
  }
}

TEST(Geometry, ProjectionRestoresConstraints) {
  std::mt19937_64 rng(18);
  for (SpaceKind space : {SpaceKind::Sphere, SpaceKind::Hyperbolic}) {
    for (int i = 0; i < 100; ++i) {
      const ChartPoint p = random_point(rng, space);
      AmbientPoint u = chart_to_ambient(space, p) * (1.0 + 1e-6);
      Vec3 v = chart_velocity_to_ambient(space, p, random_vector(rng)) + 1e-6 * u;
      project_to_space(space, u, v);
      EXPECT_LT(std::abs(quadric_residual(space, u)), 1e-14);
      EXPECT_LT(std::abs(tangency_residual(space, u, v)), 1e-14);
    }
  }
}
