#pragma once

// Central projection of the flat Kepler and Hooke problems onto the unit
// sphere and the unit pseudosphere, tangent to the flat plane at O.
//
// Position: q -> gamma(q) (q, 1). Velocity: push-forward divided by gamma^2,
// which is the time change d(t_hat) = gamma^2 dt. The force rule (division by
// gamma^4) is not applied explicitly; verify_projection() checks that the
// projected motion solves the independently defined curved system.

#include <algorithm>
#include <vector>

#include "curvlam/error.hpp"
#include "curvlam/geometry.hpp"
#include "curvlam/integrate.hpp"
#include "curvlam/systems.hpp"

namespace curvlam {

class ProjectionMap {
 public:
  explicit ProjectionMap(SpaceKind target) : target_(target) {
    if (target == SpaceKind::Flat) throw Error("projection target must be a curved space");
  }

  SpaceKind target() const { return target_; }

  /// The curved system whose force function is the projection of the flat one.
  SystemSpec target_spec(const SystemSpec& flat) const {
    return {flat.problem, target_, flat.force_sign};
  }

 private:
  SpaceKind target_;
};

inline State project_state(const ProjectionMap& map, const State& flat) {
  const ChartPoint p = flat.q.head<2>();
  const double g = gamma(map.target(), p);
  return make_state(map.target(), p, flat.v.head<2>() / (g * g), flat.t);
}

inline ExtraIntegrand gamma_squared_integrand(const ProjectionMap& map) {
  return [space = map.target()](const State& s) {
    const double g = gamma(space, ChartPoint(s.q.head<2>()));
    return g * g;
  };
}

namespace detail {

// Re-propagates the flat arc with gamma^2 as an extra error-controlled
// quadrature; the samples then carry the cumulative curved time. The flat
// arc's own steps can be far too long for gamma^2 near the disk boundary.
inline Arc with_projected_clock(const Arc& flat_arc, const ProjectionMap& map,
                                const Tolerances& tol = {}) {
  if (flat_arc.spec.space != SpaceKind::Flat) throw Error("projection source must be a flat arc");
  return propagate(flat_arc.spec, flat_arc.start, flat_arc.dt, tol, gamma_squared_integrand(map));
}

}  // namespace detail

/// Curved elapsed time int gamma^2(q(t)) dt along a flat arc.
inline double reparametrized_time(const Arc& flat_arc, const ProjectionMap& map,
                                  const Tolerances& tol = {}) {
  return detail::with_projected_clock(flat_arc, map, tol).extra;
}

struct ProjectionReport {
  double dt_flat = 0.0;
  double dt_curved = 0.0;
  // Ambient distance between the curved endpoint and the projected flat endpoint.
  double endpoint_residual = 0.0;
  // Worst ambient distance over the flat samples, compared at matching curved times.
  double max_sample_residual = 0.0;
};

inline ProjectionReport verify_projection(const Arc& flat_arc, const ProjectionMap& map,
                                          const Tolerances& tol = {}) {
  const SystemSpec curved = map.target_spec(flat_arc.spec);
  const Arc clocked = detail::with_projected_clock(flat_arc, map, tol);

  ProjectionReport report;
  report.dt_flat = flat_arc.dt;
  report.dt_curved = clocked.extra;

  const State curved_start = project_state(map, flat_arc.start);
  const Arc whole = propagate(curved, curved_start, report.dt_curved, tol);
  report.endpoint_residual = (whole.end.q - project_state(map, clocked.end).q).norm();

  State current = curved_start;
  for (std::size_t i = 1; i < clocked.samples.size(); ++i) {
    const double segment = clocked.samples[i].extra - clocked.samples[i - 1].extra;
    if (segment > 0.0) current = propagate(curved, current, segment, tol).end;
    const State expected = project_state(map, clocked.samples[i].state);
    report.max_sample_residual =
        std::max(report.max_sample_residual, (current.q - expected.q).norm());
  }
  return report;
}

}  // namespace curvlam
