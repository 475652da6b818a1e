#pragma once

// CSV export of arcs and Lambert paths. Numbers use 17 significant digits.

#include <cstdio>
#include <ostream>
#include <string>

#include "curvlam/integrate.hpp"
#include "curvlam/lambert.hpp"

namespace curvlam {

inline std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace detail {

template <typename... Values>
void write_row(std::ostream& os, double first, Values... rest) {
  os << format_number(first);
  ((os << ',' << format_number(rest)), ...);
  os << '\n';
}

}  // namespace detail

/// Flat arcs: t,x,y,vx,vy,H,S,w. Curved arcs: t,x,y,z,vx,vy,vz,H,S,w (ambient).
inline void write_arc_csv(std::ostream& os, const Arc& arc) {
  const bool flat = arc.spec.space == SpaceKind::Flat;
  os << (flat ? "t,x,y,vx,vy,H,S,w\n" : "t,x,y,z,vx,vy,vz,H,S,w\n");
  for (const ArcSample& s : arc.samples) {
    const State& st = s.state;
    const double H = total_energy(arc.spec, st);
    if (flat) {
      detail::write_row(os, st.t, st.q.x(), st.q.y(), st.v.x(), st.v.y(), H, s.S, s.w);
    } else {
      detail::write_row(os, st.t, st.q.x(), st.q.y(), st.q.z(), st.v.x(), st.v.y(), st.v.z(), H,
                        s.S, s.w);
    }
  }
}

/// s,A_x,A_y,B_x,B_y,invariant1,invariant2
inline void write_flow_csv(std::ostream& os, const SystemSpec& spec, const FlowPath& path) {
  os << "s,A_x,A_y,B_x,B_y,invariant1,invariant2\n";
  for (std::size_t i = 0; i < path.pairs.size(); ++i) {
    const EndPair& p = path.pairs[i];
    const InvariantPair inv = invariant_pair(spec, p);
    detail::write_row(os, path.s[i], p.A.x(), p.A.y(), p.B.x(), p.B.y(), inv.first, inv.second);
  }
}

}  // namespace curvlam
