#pragma once

// Kepler and Hooke problems on the flat, spherical and hyperbolic planes.
//
// States live in the ambient model of geometry.hpp. A flat state is (x, y, 1)
// with velocity (vx, vy, 0); curved states sit on the quadric with a tangent
// velocity. Units are nondimensional: unit attraction constant and unit
// curvature.

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "curvlam/error.hpp"
#include "curvlam/geometry.hpp"

namespace curvlam {

enum class Problem { Kepler, Hooke };

enum class ForceSign : int { Attractive = 1, Repulsive = -1 };

struct SystemSpec {
  Problem problem = Problem::Kepler;
  SpaceKind space = SpaceKind::Flat;
  ForceSign force_sign = ForceSign::Attractive;

  double sign() const { return static_cast<double>(static_cast<int>(force_sign)); }

  friend bool operator==(const SystemSpec&, const SystemSpec&) = default;
};

inline std::string to_string(Problem problem) {
  return problem == Problem::Kepler ? "kepler" : "hooke";
}

inline Problem parse_problem(std::string_view name) {
  if (name == "kepler") return Problem::Kepler;
  if (name == "hooke") return Problem::Hooke;
  throw Error("unknown problem '" + std::string(name) + "'");
}

inline ForceSign parse_force_sign(int value) {
  if (value == 1) return ForceSign::Attractive;
  if (value == -1) return ForceSign::Repulsive;
  throw Error("force_sign must be +1 or -1");
}

inline std::string to_string(const SystemSpec& spec) {
  std::string s = to_string(spec.problem) + ":" + to_string(spec.space);
  if (spec.force_sign == ForceSign::Repulsive) s += ":repulsive";
  return s;
}

/// Parses "problem:space[:attractive|:repulsive]", e.g. "kepler:sphere".
inline SystemSpec parse_spec(std::string_view text) {
  SystemSpec spec;
  const auto first = text.find(':');
  if (first == std::string_view::npos) throw Error("spec must look like problem:space");
  spec.problem = parse_problem(text.substr(0, first));
  const std::string rest(text.substr(first + 1));
  const auto second = rest.find(':');
  spec.space = parse_space(std::string_view(rest).substr(0, second));
  if (second != std::string::npos) {
    const std::string sign = rest.substr(second + 1);
    if (sign == "repulsive") {
      spec.force_sign = ForceSign::Repulsive;
    } else if (sign != "attractive") {
      throw Error("unknown force sign '" + std::string(sign) + "'");
    }
  }
  return spec;
}

struct State {
  Vec3 q = pole();
  Vec3 v = Vec3::Zero();
  double t = 0.0;
};

/// Builds a state from chart position and chart velocity.
inline State make_state(SpaceKind space, const ChartPoint& p, const Vec2& v, double t = 0.0) {
  return {chart_to_ambient(space, p), chart_velocity_to_ambient(space, p, v), t};
}

inline ChartPoint chart_position(SpaceKind space, const State& s) {
  return ambient_to_chart(space, s.q);
}

inline Vec2 chart_velocity(SpaceKind space, const State& s) {
  return ambient_velocity_to_chart(space, s.q, s.v);
}

inline constexpr double kCollisionRadius = 1e-8;
inline constexpr double kEquatorMargin = 1e-8;

/// Distance-like measure to the set where the force function blows up:
/// |(u1, u2)| for Kepler, the height above the equator for spherical Hooke.
inline double singular_clearance(const SystemSpec& spec, const AmbientPoint& u) {
  if (spec.problem == Problem::Kepler) return u.head<2>().norm();
  if (spec.space == SpaceKind::Sphere) return u.z();
  return std::numeric_limits<double>::infinity();
}

/// Throws SingularityError where the force function blows up.
inline void check_singularity(const SystemSpec& spec, const AmbientPoint& u) {
  if (!u.allFinite()) throw SingularityError("non-finite configuration");
  const double clearance = singular_clearance(spec, u);
  if (spec.problem == Problem::Kepler && clearance < kCollisionRadius) {
    throw SingularityError("collision with the attracting centre");
  }
  if (spec.problem == Problem::Hooke && clearance < std::sin(kEquatorMargin)) {
    throw SingularityError("spherical Hooke orbit reached the equator");
  }
}

/// U as a function of the geodesic distance rho from O:
/// Kepler 1/r, 1/tan(theta), 1/tanh(s); Hooke -r^2/2, -tan^2(theta)/2, -tanh^2(s)/2.
inline double force_function_of_distance(const SystemSpec& spec, double rho) {
  double f = 0.0;
  if (spec.problem == Problem::Kepler) {
    if (!(std::abs(rho) > 0.0)) throw SingularityError("Kepler force function at the centre");
    switch (spec.space) {
      case SpaceKind::Flat:
        f = 1.0 / rho;
        break;
      case SpaceKind::Sphere:
        f = 1.0 / std::tan(rho);
        break;
      case SpaceKind::Hyperbolic:
        f = 1.0 / std::tanh(rho);
        break;
    }
  } else {
    switch (spec.space) {
      case SpaceKind::Flat:
        f = -0.5 * rho * rho;
        break;
      case SpaceKind::Sphere: {
        if (std::abs(std::cos(rho)) < std::sin(kEquatorMargin)) {
          throw SingularityError("spherical Hooke force function at the equator");
        }
        const double t = std::tan(rho);
        f = -0.5 * t * t;
        break;
      }
      case SpaceKind::Hyperbolic: {
        const double t = std::tanh(rho);
        f = -0.5 * t * t;
        break;
      }
    }
  }
  return spec.sign() * f;
}

inline double force_function(const SystemSpec& spec, const AmbientPoint& u) {
  return force_function_of_distance(spec, radial_distance(spec.space, u));
}

inline double force_function(const SystemSpec& spec, const ChartPoint& p) {
  return force_function_of_distance(spec, radial_distance(spec.space, p));
}

/// Metric gradient of U, as an ambient tangent vector.
///
/// U extends off the space as f(R) with R = |(u1,u2)| / u3, which is constant
/// along rays. Its Euclidean gradient is then orthogonal to u, hence already
/// tangent to the sphere; on the hyperboloid the metric gradient is the
/// Minkowski dual, which flips the third component.
inline Vec3 force_gradient(const SystemSpec& spec, const AmbientPoint& u) {
  check_singularity(spec, u);
  const double s = spec.sign();
  Vec3 grad;
  if (spec.space == SpaceKind::Flat) {
    const Vec2 p = u.head<2>();
    if (spec.problem == Problem::Kepler) {
      const double r = p.norm();
      grad << -s * p / (r * r * r), 0.0;
    } else {
      grad << -s * p, 0.0;
    }
    return grad;
  }
  const double rho = u.head<2>().norm();
  const double z = u.z();
  if (spec.problem == Problem::Kepler) {
    const double rho3 = rho * rho * rho;
    grad << -s * z * u.x() / rho3, -s * z * u.y() / rho3, s / rho;
  } else {
    const double z2 = z * z;
    grad << -s * u.x() / z2, -s * u.y() / z2, s * rho * rho / (z2 * z);
  }
  if (spec.space == SpaceKind::Hyperbolic) grad.z() = -grad.z();
  return grad;
}

inline double kinetic_energy(const SystemSpec& spec, const State& s) {
  return 0.5 * ambient_dot(spec.space, s.v, s.v);
}

inline double total_energy(const SystemSpec& spec, const State& s) {
  return kinetic_energy(spec, s) - force_function(spec, s.q);
}

inline double lagrangian(const SystemSpec& spec, const State& s) {
  return kinetic_energy(spec, s) + force_function(spec, s.q);
}

struct StateDerivative {
  Vec3 dq;
  Vec3 dv;
};

/// q'' = grad U + lambda q, with lambda keeping q on the quadric:
/// sphere lambda = -|v|^2, hyperboloid lambda = <v,v> (Minkowski).
inline StateDerivative eom_rhs(const SystemSpec& spec, const State& s) {
  Vec3 acc = force_gradient(spec, s.q);
  switch (spec.space) {
    case SpaceKind::Sphere:
      acc -= s.v.squaredNorm() * s.q;
      break;
    case SpaceKind::Hyperbolic:
      acc += ambient_dot(spec.space, s.v, s.v) * s.q;
      break;
    case SpaceKind::Flat:
      break;
  }
  return {s.v, acc};
}

/// <gZ, v> for the rotation generator Z about the O axis: u1 v2 - u2 v1.
inline double rotational_momentum(const State& s) {
  return s.q.x() * s.v.y() - s.q.y() * s.v.x();
}

struct FirstIntegralsKepler {
  double C = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

/// Angular momentum and eccentricity vector of a flat Kepler state. The orbit
/// satisfies alpha x + beta y = sign r - C^2 and alpha^2 + beta^2 = 1 + 2 H C^2.
inline FirstIntegralsKepler kepler_first_integrals(const State& s,
                                                   ForceSign force_sign = ForceSign::Attractive) {
  const double x = s.q.x();
  const double y = s.q.y();
  const double r = std::hypot(x, y);
  if (!(r > 0.0)) throw SingularityError("first integrals undefined at the centre");
  const double C = x * s.v.y() - y * s.v.x();
  const double sign = static_cast<int>(force_sign);
  return {C, sign * x / r - s.v.y() * C, sign * y / r + s.v.x() * C};
}

}  // namespace curvlam
