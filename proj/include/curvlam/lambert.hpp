#pragma once

// Lambert vector fields on pairs of end points (A, B).
//
// A Lambert vector (dA, dB) satisfies <g v_A, dA> = <g v_B, dB> for every arc
// from A to B. Flat Kepler uses dA = dB = B/r_B - A/r_A (the pair is translated
// and r_A + r_B is kept); flat Hooke uses dA = (y_A - y_B, x_B - x_A) = -dB
// (chord and antichord are kept). Curved fields come from the flat ones in
// gnomonic chart coordinates as dY = G dX with G = I + k q q^T.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "curvlam/error.hpp"
#include "curvlam/geometry.hpp"
#include "curvlam/integrate.hpp"
#include "curvlam/systems.hpp"

namespace curvlam {

struct EndPair {
  ChartPoint A = ChartPoint::Zero();
  ChartPoint B = ChartPoint::Zero();
};

struct LambertVector {
  Vec2 dA = Vec2::Zero();
  Vec2 dB = Vec2::Zero();
};

struct InvariantPair {
  double first = 0.0;
  double second = 0.0;
};

/// The rotation generator (-y, x) at both ends.
inline LambertVector trivial_lambert_vector(const EndPair& pair) {
  return {{-pair.A.y(), pair.A.x()}, {-pair.B.y(), pair.B.x()}};
}

inline LambertVector flat_lambert_vector(Problem problem, const EndPair& pair) {
  if (problem == Problem::Kepler) {
    const double ra = pair.A.norm();
    const double rb = pair.B.norm();
    if (!(ra > 0.0) || !(rb > 0.0)) {
      throw SingularityError("Kepler Lambert field is undefined at the centre");
    }
    const Vec2 d = pair.B / rb - pair.A / ra;
    return {d, d};
  }
  const Vec2 d(pair.A.y() - pair.B.y(), pair.B.x() - pair.A.x());
  return {d, -d};
}

/// I + k q q^T, the factor gamma^2 ghat^-1 g relating flat and curved fields.
inline Mat2 lambert_transfer_matrix(SpaceKind space, const ChartPoint& q) {
  return Mat2::Identity() + curvature(space) * q * q.transpose();
}

inline LambertVector lambert_vector(const SystemSpec& spec, const EndPair& pair) {
  check_chart_domain(spec.space, pair.A);
  check_chart_domain(spec.space, pair.B);
  const LambertVector flat = flat_lambert_vector(spec.problem, pair);
  if (spec.space == SpaceKind::Flat) return flat;
  // Row vector times matrix; G is symmetric so this is G * d.
  return {(flat.dA.transpose() * lambert_transfer_matrix(spec.space, pair.A)).transpose(),
          (flat.dB.transpose() * lambert_transfer_matrix(spec.space, pair.B)).transpose()};
}

/// |<g v_A, dA> - <g v_B, dB>| for chart end velocities of an arc from A to B.
inline double lambert_defect(const SystemSpec& spec, const EndPair& pair, const LambertVector& X,
                             const Vec2& v_a, const Vec2& v_b) {
  const double at_a = v_a.dot(metric(spec.space, pair.A) * X.dA);
  const double at_b = v_b.dot(metric(spec.space, pair.B) * X.dB);
  return std::abs(at_a - at_b);
}

inline double lambert_defect(const LambertVector& X, const Arc& arc) {
  const SpaceKind space = arc.spec.space;
  const EndPair pair{chart_position(space, arc.start), chart_position(space, arc.end)};
  return lambert_defect(arc.spec, pair, X, chart_velocity(space, arc.start),
                        chart_velocity(space, arc.end));
}

/// Kepler: (d(A,B), d(O,A) + d(O,B)); Hooke: (d(A,B), d(A',B)) with A' = -A.
inline InvariantPair invariant_pair(const SystemSpec& spec, const EndPair& pair) {
  const double chord = geodesic_distance(spec.space, pair.A, pair.B);
  if (spec.problem == Problem::Kepler) {
    return {chord, radial_distance(spec.space, pair.A) + radial_distance(spec.space, pair.B)};
  }
  return {chord, geodesic_distance(spec.space, antipode_reflect(pair.A), pair.B)};
}

using PairField = std::function<LambertVector(const EndPair&)>;

struct FlowPath {
  std::vector<double> s;
  std::vector<EndPair> pairs;
  bool truncated = false;
  std::string reason;
};

namespace detail {

// A Kepler end point closer to the centre than a few steps cannot be
// followed: the field turns discontinuously at the centre.
inline void check_flow_domain(const SystemSpec& spec, const EndPair& pair,
                              double collision_radius = kCollisionRadius) {
  for (const ChartPoint& p : {pair.A, pair.B}) {
    check_chart_domain(spec.space, p);
    if (spec.problem == Problem::Kepler && p.norm() < collision_radius) {
      throw SingularityError("flow reached the Kepler centre");
    }
    // The sphere chart covers the open hemisphere; a huge chart radius is the equator.
    if (spec.space == SpaceKind::Sphere && p.norm() > 1e8) {
      throw DomainError("flow reached the hemisphere boundary");
    }
  }
}

inline EndPair rk4_step(const PairField& field, const EndPair& p, double h) {
  auto shifted = [](const EndPair& base, const LambertVector& k, double c) {
    return EndPair{base.A + c * k.dA, base.B + c * k.dB};
  };
  const LambertVector k1 = field(p);
  const LambertVector k2 = field(shifted(p, k1, 0.5 * h));
  const LambertVector k3 = field(shifted(p, k2, 0.5 * h));
  const LambertVector k4 = field(shifted(p, k3, h));
  return {p.A + h / 6.0 * (k1.dA + 2.0 * k2.dA + 2.0 * k3.dA + k4.dA),
          p.B + h / 6.0 * (k1.dB + 2.0 * k2.dB + 2.0 * k3.dB + k4.dB)};
}

}  // namespace detail

/// Integrates a field on M x M with classical RK4 through the increasing
/// parameter values in targets (targets.front() is the start), using equal
/// substeps no longer than max_step. Stops early, flagged, on leaving the
/// domain of spec.
inline FlowPath integrate_pair_field(const SystemSpec& spec, const PairField& field,
                                     const EndPair& start, const std::vector<double>& targets,
                                     double max_step = 1e-3) {
  if (targets.empty()) throw Error("flow needs at least one parameter value");
  if (!(max_step > 0.0)) throw Error("flow step must be positive");
  detail::check_flow_domain(spec, start);
  FlowPath path;
  path.s.push_back(targets.front());
  path.pairs.push_back(start);
  EndPair current = start;
  for (std::size_t i = 1; i < targets.size(); ++i) {
    const double span = targets[i] - targets[i - 1];
    if (!(span >= 0.0)) throw Error("flow parameter values must increase");
    const auto n = static_cast<long>(std::ceil(span / max_step - 1e-9));
    const double h = n > 0 ? span / static_cast<double>(n) : 0.0;
    try {
      for (long k = 0; k < n; ++k) {
        current = detail::rk4_step(field, current, h);
        detail::check_flow_domain(spec, current, std::max(kCollisionRadius, 4.0 * h));
      }
    } catch (const Error& e) {
      path.truncated = true;
      path.reason = e.what();
      return path;
    }
    path.s.push_back(targets[i]);
    path.pairs.push_back(current);
  }
  return path;
}

inline std::vector<double> uniform_grid(double span, std::size_t count) {
  if (count < 2) throw Error("a grid needs at least two points");
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = span * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return grid;
}

/// Lambert path of spec's field over s in [0, s_span], one node per step.
inline FlowPath lambert_flow(const SystemSpec& spec, const EndPair& start, double s_span,
                             double step = 1e-3) {
  if (!(s_span > 0.0)) throw Error("flow span must be positive");
  const auto n = static_cast<std::size_t>(std::ceil(s_span / step - 1e-9));
  const PairField field = [spec](const EndPair& p) { return lambert_vector(spec, p); };
  return integrate_pair_field(spec, field, start, uniform_grid(s_span, n + 1), step);
}

/// Conic through A and B with a prescribed eccentricity component beta.
struct FlatKeplerArc {
  Vec2 v_a = Vec2::Zero();
  Vec2 v_b = Vec2::Zero();
  double C = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double energy = 0.0;
};

/// Solves alpha x + beta y + C^2 = r at A and B for (alpha, C^2) and returns
/// the end velocities C v = (beta - y/r, -alpha + x/r) of the C > 0 branch
/// (negate both velocities for the reverse branch). Empty when C^2 <= 0.
inline std::optional<FlatKeplerArc> arcs_through_flat_kepler(const ChartPoint& A,
                                                             const ChartPoint& B, double beta) {
  const double ra = A.norm();
  const double rb = B.norm();
  if (!(ra > 0.0) || !(rb > 0.0)) throw SingularityError("end point at the Kepler centre");
  const double cross = A.x() * B.y() - A.y() * B.x();
  if (std::abs(cross) <= 1e-12 * ra * rb) {
    throw DegenerateGeometryError("end points are collinear with the centre");
  }
  const double det = A.x() - B.x();
  if (std::abs(det) <= 1e-12 * std::max(ra, rb)) {
    throw DegenerateGeometryError("beta does not parametrize the conics when x_A = x_B");
  }
  const double rhs_a = ra - beta * A.y();
  const double rhs_b = rb - beta * B.y();
  const double alpha = (rhs_a - rhs_b) / det;
  const double c2 = rhs_a - alpha * A.x();
  if (!(c2 > 0.0)) return std::nullopt;
  const double C = std::sqrt(c2);
  FlatKeplerArc arc;
  arc.C = C;
  arc.alpha = alpha;
  arc.beta = beta;
  arc.v_a = Vec2(beta - A.y() / ra, -alpha + A.x() / ra) / C;
  arc.v_b = Vec2(beta - B.y() / rb, -alpha + B.x() / rb) / C;
  arc.energy = (alpha * alpha + beta * beta - 1.0) / (2.0 * c2);
  return arc;
}

}  // namespace curvlam
