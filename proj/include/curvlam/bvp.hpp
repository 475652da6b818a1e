#pragma once

// Two-point boundary value problems: arcs from A to B at a given energy
// (unknowns: departure direction and elapsed time) and families of arcs with
// fixed ends parametrized by the elapsed time (unknown: departure velocity).
//
// Newton Jacobians are central differences over a replayed step sequence
// (propagate_steps), so they are free of step-selection noise. Once the miss
// is small the step sequence is frozen and the returned arc is the replayed
// one, which lets Newton converge to round-off.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "curvlam/error.hpp"
#include "curvlam/geometry.hpp"
#include "curvlam/integrate.hpp"
#include "curvlam/systems.hpp"

namespace curvlam {

struct ShootingGuess {
  double psi = 0.0;  // departure direction, angle of the chart velocity
  double dt = 1.0;
};

struct BvpProblem {
  SystemSpec spec;
  ChartPoint A = ChartPoint::Zero();
  ChartPoint B = ChartPoint::Zero();
  double H = 0.0;
  ShootingGuess guess;
};

struct BvpOptions {
  int max_iterations = 100;
  double fd_step = 1e-7;
  // Converged when the chart miss is below this.
  double target_miss = 1e-12;
  // Largest miss still accepted when Newton stalls.
  double accept_miss = 1e-9;
  // Below this miss the step sequence is frozen.
  double freeze_miss = 1e-6;
};

struct BvpSolution {
  Arc arc;
  double psi = 0.0;
  int iterations = 0;
  double miss = 0.0;
};

/// Speed sqrt(2 (H + U(A))) in the metric of the space.
inline double initial_speed(const SystemSpec& spec, const ChartPoint& A, double H) {
  const double kinetic = H + force_function(spec, A);
  if (!(kinetic > 0.0)) throw DomainError("energy too low to depart from A");
  return std::sqrt(2.0 * kinetic);
}

/// Departure state at A with the given speed, heading along chart angle psi.
inline State departure_state(const SystemSpec& spec, const ChartPoint& A, double speed,
                             double psi) {
  State s;
  s.q = chart_to_ambient(spec.space, A);
  const Vec3 dir = chart_velocity_to_ambient(spec.space, A, Vec2(std::cos(psi), std::sin(psi)));
  s.v = speed * dir / std::sqrt(ambient_dot(spec.space, dir, dir));
  return s;
}

namespace detail {

struct ShootingModel {
  SystemSpec spec;
  ChartPoint target = ChartPoint::Zero();
  // Maps the unknowns to a start state and an elapsed time.
  std::function<std::pair<State, double>(const Vec2&)> build;
  Vec2 caps = Vec2::Constant(0.5);
};

struct ShootingResult {
  Vec2 x = Vec2::Zero();
  Arc arc;
  int iterations = 0;
  double miss = 0.0;
};

class Shooter {
 public:
  Shooter(ShootingModel model, const Tolerances& tol, const BvpOptions& opts)
      : model_(std::move(model)), tol_(tol), opts_(opts) {}

  ShootingResult solve(const Vec2& x0) {
    ShootingResult r;
    r.x = x0;
    r.arc = evaluate(x0);
    Vec2 F = miss(r.arc);
    for (r.iterations = 0; r.iterations < opts_.max_iterations; ++r.iterations) {
      if (F.norm() <= opts_.target_miss) break;
      if (!frozen_ && F.norm() < opts_.freeze_miss) {
        steps_ = r.arc.steps;
        dt_ref_ = r.arc.dt;
        frozen_ = true;
      }
      const Mat2 J = jacobian(r.x, r.arc);
      const Eigen::FullPivLU<Mat2> lu(J);
      if (!lu.isInvertible()) throw ConvergenceError("shooting Jacobian is singular");
      Vec2 delta = -lu.solve(F);
      double shrink = 1.0;
      for (int j = 0; j < 2; ++j) {
        if (std::abs(delta(j)) > model_.caps(j)) {
          shrink = std::min(shrink, model_.caps(j) / std::abs(delta(j)));
        }
      }
      delta *= shrink;

      bool accepted = false;
      for (double lambda = 1.0; lambda >= 1.0 / 256.0; lambda *= 0.5) {
        const Vec2 x = r.x + lambda * delta;
        try {
          Arc arc = evaluate(x);
          const Vec2 f = miss(arc);
          if (f.norm() < F.norm()) {
            r.x = x;
            r.arc = std::move(arc);
            F = f;
            accepted = true;
            break;
          }
        } catch (const Error&) {
          // Left the domain or hit a singularity; damp further.
        }
      }
      if (!accepted) break;
    }
    r.miss = F.norm();
    if (!(r.miss <= opts_.accept_miss)) {
      throw ConvergenceError("shooting did not converge (miss " + std::to_string(r.miss) + ")");
    }
    return r;
  }

 private:
  Arc evaluate(const Vec2& x) const {
    const auto [start, dt] = model_.build(x);
    if (!(dt > 0.0)) throw DomainError("elapsed time must stay positive");
    if (frozen_) return propagate_steps(model_.spec, start, steps_, dt / dt_ref_);
    return propagate(model_.spec, start, dt, tol_);
  }

  Vec2 miss(const Arc& arc) const {
    return chart_position(model_.spec.space, arc.end) - model_.target;
  }

  Mat2 jacobian(const Vec2& x, const Arc& nominal) const {
    const std::vector<double>& steps = frozen_ ? steps_ : nominal.steps;
    const double dt_ref = frozen_ ? dt_ref_ : nominal.dt;
    Mat2 J;
    for (int j = 0; j < 2; ++j) {
      Vec2 h = Vec2::Zero();
      h(j) = opts_.fd_step;
      const auto [sp, dtp] = model_.build(x + h);
      const auto [sm, dtm] = model_.build(x - h);
      const ChartPoint bp =
          chart_position(model_.spec.space, propagate_steps(model_.spec, sp, steps, dtp / dt_ref).end);
      const ChartPoint bm =
          chart_position(model_.spec.space, propagate_steps(model_.spec, sm, steps, dtm / dt_ref).end);
      J.col(j) = (bp - bm) / (2.0 * opts_.fd_step);
    }
    return J;
  }

  ShootingModel model_;
  Tolerances tol_;
  BvpOptions opts_;
  bool frozen_ = false;
  std::vector<double> steps_;
  double dt_ref_ = 1.0;
};

}  // namespace detail

/// Arc of p.spec from A to B at energy p.H, on the branch reached from p.guess.
inline BvpSolution solve_arc(const BvpProblem& p, const Tolerances& tol = {},
                             const BvpOptions& opts = {}) {
  if (!(p.guess.dt > 0.0)) throw DomainError("guessed elapsed time must be positive");
  check_chart_domain(p.spec.space, p.A);
  check_chart_domain(p.spec.space, p.B);
  const double speed = initial_speed(p.spec, p.A, p.H);

  detail::ShootingModel model;
  model.spec = p.spec;
  model.target = p.B;
  model.build = [spec = p.spec, A = p.A, speed](const Vec2& x) {
    return std::pair{departure_state(spec, A, speed, x(0)), x(1)};
  };
  model.caps = Vec2(0.5, 0.5 * p.guess.dt);

  detail::Shooter shooter(model, tol, opts);
  detail::ShootingResult r = shooter.solve(Vec2(p.guess.psi, p.guess.dt));
  return {std::move(r.arc), r.x(0), r.iterations, r.miss};
}

/// Arc from A to B taking exactly dt, starting Newton at chart velocity v_guess.
inline BvpSolution solve_fixed_time(const SystemSpec& spec, const ChartPoint& A,
                                    const ChartPoint& B, double dt, const Vec2& v_guess,
                                    const Tolerances& tol = {}, const BvpOptions& opts = {}) {
  detail::ShootingModel model;
  model.spec = spec;
  model.target = B;
  model.build = [spec, A, dt](const Vec2& v) { return std::pair{make_state(spec.space, A, v), dt}; };
  model.caps = Vec2::Constant(0.5 * std::max(1.0, v_guess.norm()));
  detail::Shooter shooter(model, tol, opts);
  detail::ShootingResult r = shooter.solve(v_guess);
  const Vec2 v = r.x;
  return {std::move(r.arc), std::atan2(v.y(), v.x()), r.iterations, r.miss};
}

struct FamilyMember {
  double dt = 0.0;
  double H = 0.0;
  double S = 0.0;
  double w = 0.0;
  Arc arc;
};

/// Fixed-end family continued in dt from a seed arc; members sorted by dt.
inline std::vector<FamilyMember> sweep_family(const SystemSpec& spec, const ChartPoint& A,
                                              const ChartPoint& B, const Arc& seed,
                                              std::vector<double> dts, const Tolerances& tol = {},
                                              const BvpOptions& opts = {}) {
  std::sort(dts.begin(), dts.end());
  const auto split = std::lower_bound(dts.begin(), dts.end(), seed.dt);
  std::vector<FamilyMember> members;
  auto run = [&](auto first, auto last) {
    Vec2 v = chart_velocity(spec.space, seed.start);
    for (auto it = first; it != last; ++it) {
      BvpSolution sol = solve_fixed_time(spec, A, B, *it, v, tol, opts);
      v = chart_velocity(spec.space, sol.arc.start);
      const double H = sol.arc.energy();
      members.push_back({*it, H, sol.arc.S, sol.arc.w, std::move(sol.arc)});
    }
  };
  run(std::make_reverse_iterator(split), dts.rend());
  run(split, dts.end());
  std::sort(members.begin(), members.end(),
            [](const FamilyMember& a, const FamilyMember& b) { return a.dt < b.dt; });
  return members;
}

struct VariationCheck {
  double dt = 0.0;
  double H = 0.0;
  double dS_ddt = 0.0;  // expected -H
  double dw_dH = 0.0;   // expected dt
  double dH_ddt = 0.0;
};

/// Five-point differences of S, w and H along the fixed-end family at dt.
inline VariationCheck check_variation_formulas(const SystemSpec& spec, const ChartPoint& A,
                                               const ChartPoint& B, const Arc& seed, double dt,
                                               double delta = 1e-2, const Tolerances& tol = {},
                                               const BvpOptions& opts = {}) {
  const std::vector<double> grid{dt - 2 * delta, dt - delta, dt, dt + delta, dt + 2 * delta};
  const std::vector<FamilyMember> m = sweep_family(spec, A, B, seed, grid, tol, opts);
  auto d = [&](auto get) {
    return (-get(m[4]) + 8.0 * get(m[3]) - 8.0 * get(m[1]) + get(m[0])) / (12.0 * delta);
  };
  VariationCheck out;
  out.dt = dt;
  out.H = m[2].H;
  out.dS_ddt = d([](const FamilyMember& f) { return f.S; });
  out.dH_ddt = d([](const FamilyMember& f) { return f.H; });
  const double dw_ddt = d([](const FamilyMember& f) { return f.w; });
  out.dw_dH = dw_ddt / out.dH_ddt;
  return out;
}

}  // namespace curvlam
