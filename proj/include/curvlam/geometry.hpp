#pragma once

// Charts, metrics and distances on the three unit-curvature planes.
//
// Every space is modelled inside R^3 with the pole O at (0,0,1):
//   Flat        the plane u3 = 1 (the tangent plane at O),
//   Sphere      the unit sphere |u| = 1,
//   Hyperbolic  the upper sheet of u1^2 + u2^2 - u3^2 = -1.
// The chart is the central projection from the origin onto the plane u3 = 1,
// so the chart point (x, y) corresponds to gamma * (x, y, 1).

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <string_view>

#include "curvlam/error.hpp"

namespace curvlam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

using ChartPoint = Vec2;
using AmbientPoint = Vec3;

enum class SpaceKind { Flat, Sphere, Hyperbolic };

inline constexpr int curvature(SpaceKind space) {
  switch (space) {
    case SpaceKind::Sphere:
      return 1;
    case SpaceKind::Hyperbolic:
      return -1;
    case SpaceKind::Flat:
      break;
  }
  return 0;
}

inline std::string to_string(SpaceKind space) {
  switch (space) {
    case SpaceKind::Sphere:
      return "sphere";
    case SpaceKind::Hyperbolic:
      return "hyperbolic";
    case SpaceKind::Flat:
      break;
  }
  return "flat";
}

inline SpaceKind parse_space(std::string_view name) {
  if (name == "flat") return SpaceKind::Flat;
  if (name == "sphere") return SpaceKind::Sphere;
  if (name == "hyperbolic") return SpaceKind::Hyperbolic;
  throw Error("unknown space '" + std::string(name) + "'");
}

inline Vec3 pole() { return {0.0, 0.0, 1.0}; }

/// Ambient bilinear form: Euclidean for the flat plane and the sphere,
/// Minkowski (+,+,-) for the hyperboloid.
inline double ambient_dot(SpaceKind space, const Vec3& a, const Vec3& b) {
  const double planar = a.x() * b.x() + a.y() * b.y();
  return space == SpaceKind::Hyperbolic ? planar - a.z() * b.z() : planar + a.z() * b.z();
}

inline void check_chart_domain(SpaceKind space, const ChartPoint& p) {
  if (!p.allFinite()) throw DomainError("chart point is not finite");
  if (space == SpaceKind::Hyperbolic && p.squaredNorm() >= 1.0) {
    throw DomainError("hyperbolic chart point outside the unit disk");
  }
}

/// Factor of the central projection: chart point p sits at gamma(p) * (p, 1).
inline double gamma(SpaceKind space, const ChartPoint& p) {
  check_chart_domain(space, p);
  return 1.0 / std::sqrt(1.0 + curvature(space) * p.squaredNorm());
}

/// Chart expression of the metric: 2T = v^T metric v for chart velocity v.
inline Mat2 metric(SpaceKind space, const ChartPoint& p) {
  const double g = gamma(space, p);
  const double k = curvature(space);
  const double x = p.x();
  const double y = p.y();
  Mat2 m;
  m << 1.0 + k * y * y, -k * x * y, -k * x * y, 1.0 + k * x * x;
  return std::pow(g, 4) * m;
}

/// gamma^-2 (I + k p p^T); closed form of metric(space, p).inverse().
inline Mat2 metric_inverse(SpaceKind space, const ChartPoint& p) {
  const double g = gamma(space, p);
  return (Mat2::Identity() + curvature(space) * p * p.transpose()) / (g * g);
}

inline AmbientPoint chart_to_ambient(SpaceKind space, const ChartPoint& p) {
  const double g = gamma(space, p);
  return g * Vec3(p.x(), p.y(), 1.0);
}

inline ChartPoint ambient_to_chart(SpaceKind space, const AmbientPoint& u) {
  if (!u.allFinite()) throw DomainError("ambient point is not finite");
  if (u.z() <= 0.0) {
    throw DomainError(space == SpaceKind::Sphere ? "point outside the chart hemisphere"
                                                 : "ambient point below the chart plane");
  }
  return {u.x() / u.z(), u.y() / u.z()};
}

/// Push-forward of a chart velocity by p -> gamma(p) (p, 1).
inline Vec3 chart_velocity_to_ambient(SpaceKind space, const ChartPoint& p, const Vec2& v) {
  const double g = gamma(space, p);
  const double k = curvature(space);
  const double radial = -k * g * g * g * p.dot(v);
  return g * Vec3(v.x(), v.y(), 0.0) + radial * Vec3(p.x(), p.y(), 1.0);
}

inline Vec2 ambient_velocity_to_chart(SpaceKind /*space*/, const AmbientPoint& u, const Vec3& v) {
  if (u.z() <= 0.0) throw DomainError("point outside the chart hemisphere");
  const double z2 = u.z() * u.z();
  return {(v.x() * u.z() - u.x() * v.z()) / z2, (v.y() * u.z() - u.y() * v.z()) / z2};
}

/// Residual of the quadric equation (zero on the space).
inline double quadric_residual(SpaceKind space, const AmbientPoint& u) {
  switch (space) {
    case SpaceKind::Sphere:
      return u.squaredNorm() - 1.0;
    case SpaceKind::Hyperbolic:
      return ambient_dot(space, u, u) + 1.0;
    case SpaceKind::Flat:
      break;
  }
  return u.z() - 1.0;
}

/// Normal component of v at u; zero for tangent vectors.
inline double tangency_residual(SpaceKind space, const AmbientPoint& u, const Vec3& v) {
  return space == SpaceKind::Flat ? v.z() : ambient_dot(space, u, v);
}

/// Nearest point of the space (along the ray for curved spaces) and the
/// tangential part of v there.
inline void project_to_space(SpaceKind space, AmbientPoint& u, Vec3& v) {
  switch (space) {
    case SpaceKind::Flat:
      u.z() = 1.0;
      v.z() = 0.0;
      return;
    case SpaceKind::Sphere:
      u.normalize();
      v -= u.dot(v) * u;
      return;
    case SpaceKind::Hyperbolic: {
      const double n2 = -ambient_dot(space, u, u);
      if (!(n2 > 0.0) || u.z() <= 0.0) throw DomainError("point left the upper hyperboloid sheet");
      u /= std::sqrt(n2);
      v += ambient_dot(space, u, v) * u;
      return;
    }
  }
}

inline double geodesic_distance(SpaceKind space, const AmbientPoint& p, const AmbientPoint& q) {
  const Vec3 d = p - q;
  switch (space) {
    case SpaceKind::Sphere:
      // 2 atan2(|p-q|, |p+q|) equals arccos(p.q) clamped to [0, pi], without
      // the cancellation of arccos near 0 and pi.
      return 2.0 * std::atan2(d.norm(), (p + q).norm());
    case SpaceKind::Hyperbolic: {
      // <p-q, p-q> = 4 sinh^2(s/2) on the upper sheet.
      const double chord2 = std::max(0.0, ambient_dot(space, d, d));
      return 2.0 * std::asinh(0.5 * std::sqrt(chord2));
    }
    case SpaceKind::Flat:
      break;
  }
  return d.head<2>().norm();
}

inline double geodesic_distance(SpaceKind space, const ChartPoint& p, const ChartPoint& q) {
  if (space == SpaceKind::Flat) {
    check_chart_domain(space, p);
    check_chart_domain(space, q);
    return (p - q).norm();
  }
  return geodesic_distance(space, chart_to_ambient(space, p), chart_to_ambient(space, q));
}

/// Geodesic distance from the pole O: r, arctan r, or artanh r.
inline double radial_distance(SpaceKind space, const ChartPoint& p) {
  check_chart_domain(space, p);
  const double r = p.norm();
  switch (space) {
    case SpaceKind::Sphere:
      return std::atan(r);
    case SpaceKind::Hyperbolic:
      return std::atanh(r);
    case SpaceKind::Flat:
      break;
  }
  return r;
}

inline double radial_distance(SpaceKind space, const AmbientPoint& u) {
  const double rho = u.head<2>().norm();
  switch (space) {
    case SpaceKind::Sphere:
      return std::atan2(rho, u.z());
    case SpaceKind::Hyperbolic:
      return std::asinh(rho);
    case SpaceKind::Flat:
      break;
  }
  return rho;
}

/// The point A' with O the midpoint of A A' (rotation by pi about the O axis).
inline ChartPoint antipode_reflect(const ChartPoint& p) { return -p; }

}  // namespace curvlam
