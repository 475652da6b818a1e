#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "curvlam/curvlam.hpp"

namespace curvlam::testing {

inline const double kPi = std::acos(-1.0);

inline std::vector<SystemSpec> all_specs() {
  std::vector<SystemSpec> out;
  for (ForceSign sign : {ForceSign::Attractive, ForceSign::Repulsive}) {
    for (Problem problem : {Problem::Kepler, Problem::Hooke}) {
      for (SpaceKind space : {SpaceKind::Flat, SpaceKind::Sphere, SpaceKind::Hyperbolic}) {
        out.push_back({problem, space, sign});
      }
    }
  }
  return out;
}

inline std::vector<SpaceKind> all_spaces() {
  return {SpaceKind::Flat, SpaceKind::Sphere, SpaceKind::Hyperbolic};
}

/// Chart point with radius in [r_min, r_max) and uniform angle.
inline ChartPoint random_point(std::mt19937_64& rng, double r_min, double r_max) {
  std::uniform_real_distribution<double> radius(r_min, r_max);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  const double r = radius(rng);
  const double a = angle(rng);
  return {r * std::cos(a), r * std::sin(a)};
}

/// Chart point inside the domain of space, away from its boundary.
inline ChartPoint random_point(std::mt19937_64& rng, SpaceKind space) {
  return random_point(rng, 0.05, space == SpaceKind::Hyperbolic ? 0.9 : 2.0);
}

inline Vec2 random_vector(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng)};
}

/// State at radius [r_min, r_max) moving mostly across the radius at 0.7 to
/// 1.2 times the flat circular Kepler speed, so Kepler orbits keep clear of
/// the centre.
inline State random_orbit_state(std::mt19937_64& rng, SpaceKind space, double r_min = 0.3,
                                double r_max = 0.6) {
  std::uniform_real_distribution<double> across(0.7, 1.2);
  std::uniform_real_distribution<double> along(-0.2, 0.2);
  std::bernoulli_distribution flip;
  const ChartPoint p = random_point(rng, r_min, r_max);
  const Vec2 radial = p.normalized();
  const Vec2 normal(-radial.y(), radial.x());
  const double turn = flip(rng) ? 1.0 : -1.0;
  return make_state(space, p, turn * across(rng) / std::sqrt(p.norm()) * normal + along(rng) * radial);
}

}  // namespace curvlam::testing
