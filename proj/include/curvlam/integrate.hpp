#pragma once

// Orbit propagation with the actions S = int L dt and w = int 2T dt
// accumulated as extra quadrature variables of the same order-8 Runge-Kutta
// integration. Local errors come from step doubling: the embedded
// Fehlberg 7(8) estimate vanishes on pure quadratures, which left S, w and
// the projection clock uncontrolled. Curved states are projected back onto
// the quadric after every accepted step.

#include <Eigen/Dense>
#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "curvlam/error.hpp"
#include "curvlam/geometry.hpp"
#include "curvlam/systems.hpp"

namespace curvlam {

struct Tolerances {
  double rel = 1e-10;
  double abs = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 2'000'000;
};

struct ArcSample {
  State state;
  double S = 0.0;
  double w = 0.0;
  double extra = 0.0;
};

/// A propagated orbit segment from start to end.
struct Arc {
  SystemSpec spec;
  State start;
  State end;
  double dt = 0.0;
  double S = 0.0;
  double w = 0.0;
  // Integral of the optional extra integrand passed to propagate().
  double extra = 0.0;
  // One sample per accepted step, the start included.
  std::vector<ArcSample> samples;
  // Accepted step sizes, replayable with propagate_steps().
  std::vector<double> steps;

  double energy() const { return total_energy(spec, start); }

  /// Quintic Hermite interpolation (positions, velocities, accelerations)
  /// between accepted steps.
  State state_at(double t) const;
};

using ExtraIntegrand = std::function<double(const State&)>;

namespace detail {

using Phase = Eigen::Matrix<double, 9, 1>;

inline State unpack(const Phase& y, double t) {
  return {y.segment<3>(0), y.segment<3>(3), t};
}

inline Phase rhs(const SystemSpec& spec, const Phase& y, const ExtraIntegrand& extra) {
  const State s = unpack(y, 0.0);
  const StateDerivative d = eom_rhs(spec, s);
  const double T = kinetic_energy(spec, s);
  const double U = force_function(spec, s.q);
  Phase out;
  out.segment<3>(0) = d.dq;
  out.segment<3>(3) = d.dv;
  out(6) = T + U;
  out(7) = 2.0 * T;
  out(8) = extra ? extra(s) : 0.0;
  return out;
}

struct StepResult {
  Phase y;
  Phase err;
};

using OdeState = std::array<double, 9>;

inline OdeState to_ode(const Phase& y) {
  OdeState out;
  Eigen::Map<Phase>(out.data()) = y;
  return out;
}

// Two half steps of the order-8 Fehlberg formula; err is their difference
// from one full step divided by 2^8 - 1.
inline StepResult rk_step(const SystemSpec& spec, const Phase& y, double h,
                          const ExtraIntegrand& extra) {
  boost::numeric::odeint::runge_kutta_fehlberg78<OdeState> stepper;
  auto system = [&](const OdeState& x, OdeState& dxdt, double /*t*/) {
    Eigen::Map<Phase>(dxdt.data()) = rhs(spec, Eigen::Map<const Phase>(x.data()), extra);
  };
  OdeState full = to_ode(y);
  OdeState half = full;
  stepper.do_step(system, full, 0.0, h);
  stepper.do_step(system, half, 0.0, 0.5 * h);
  stepper.do_step(system, half, 0.5 * h, 0.5 * h);
  const Eigen::Map<const Phase> a(half.data());
  const Eigen::Map<const Phase> b(full.data());
  return {a, (a - b) / 255.0};
}

inline double error_norm(const Phase& err, const Phase& y0, const Phase& y1,
                         const Tolerances& tol) {
  double worst = 0.0;
  for (int i = 0; i < err.size(); ++i) {
    const double sc = tol.abs + tol.rel * std::max(std::abs(y0(i)), std::abs(y1(i)));
    worst = std::max(worst, std::abs(err(i)) / sc);
  }
  return worst;
}

inline void project(SpaceKind space, Phase& y) {
  Vec3 q = y.segment<3>(0);
  Vec3 v = y.segment<3>(3);
  project_to_space(space, q, v);
  y.segment<3>(0) = q;
  y.segment<3>(3) = v;
}

inline Phase pack(const State& s) {
  Phase y;
  y << s.q, s.v, 0.0, 0.0, 0.0;
  return y;
}

inline void validate_start(const SystemSpec& spec, const State& start) {
  if (!start.q.allFinite() || !start.v.allFinite()) throw DomainError("non-finite start state");
  if (std::abs(quadric_residual(spec.space, start.q)) > 1e-10) {
    throw DomainError("start position is not on the configuration space");
  }
  if (std::abs(tangency_residual(spec.space, start.q, start.v)) > 1e-8) {
    throw DomainError("start velocity is not tangent to the configuration space");
  }
  check_singularity(spec, start.q);
}

inline ArcSample make_sample(const Phase& y, double t) {
  return {unpack(y, t), y(6), y(7), y(8)};
}

inline Arc finish(const SystemSpec& spec, const State& start, const Phase& y, double t_end,
                  std::vector<ArcSample> samples, std::vector<double> steps) {
  Arc arc;
  arc.spec = spec;
  arc.start = start;
  arc.end = unpack(y, t_end);
  arc.dt = t_end - start.t;
  arc.S = y(6);
  arc.w = y(7);
  arc.extra = y(8);
  arc.samples = std::move(samples);
  arc.steps = std::move(steps);
  return arc;
}

}  // namespace detail

/// Propagates start for a time dt > 0 with adaptive step control.
inline Arc propagate(const SystemSpec& spec, const State& start, double dt,
                     const Tolerances& tol = {}, const ExtraIntegrand& extra = {}) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("propagation time must be positive");
  detail::validate_start(spec, start);

  detail::Phase y = detail::pack(start);
  detail::project(spec.space, y);
  const detail::Phase k1 = detail::rhs(spec, y, extra);

  // Initial step from the size of the derivative, then adapted.
  const double scale =
      std::max(1e-300, (k1.head<6>().cwiseAbs().maxCoeff()) / (1.0 + y.head<6>().norm()));
  double h = std::min({tol.max_step, dt, 0.05 / scale, 0.1 * dt});

  std::vector<ArcSample> samples{detail::make_sample(y, start.t)};
  std::vector<double> steps;
  double elapsed = 0.0;
  long count = 0;
  while (elapsed < dt) {
    if (++count > tol.max_steps) throw StepSizeError("too many integration steps");
    const double remaining = dt - elapsed;
    const bool last = h >= remaining * (1.0 - 1e-12);
    const double step = last ? remaining : h;
    if (step < 1e-14 * std::max(1.0, std::abs(start.t + elapsed))) {
      check_singularity(spec, y.head<3>());
      if (singular_clearance(spec, y.head<3>()) < 1e-4) {
        throw SingularityError("orbit runs into the singular set");
      }
      throw StepSizeError("step size underflow");
    }

    detail::StepResult trial;
    double err = 0.0;
    try {
      trial = detail::rk_step(spec, y, step, extra);
      err = trial.y.allFinite() ? detail::error_norm(trial.err, y, trial.y, tol)
                                : std::numeric_limits<double>::infinity();
    } catch (const SingularityError&) {
      // A stage touched the singular set; retry with a smaller step.
      err = std::numeric_limits<double>::infinity();
    }

    if (err <= 1.0) {
      y = trial.y;
      detail::project(spec.space, y);
      check_singularity(spec, y.head<3>());
      elapsed = last ? dt : elapsed + step;
      steps.push_back(step);
      samples.push_back(detail::make_sample(y, start.t + elapsed));
      const double factor = std::clamp(0.9 * std::pow(std::max(err, 1e-12), -1.0 / 9.0), 0.2, 4.0);
      h = std::min(step * factor, tol.max_step);
    } else {
      const double factor = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -1.0 / 9.0)) : 0.25;
      h = step * factor;
    }
  }
  return detail::finish(spec, start, y, start.t + dt, std::move(samples), std::move(steps));
}

/// Replays a fixed step sequence (each step multiplied by scale) without error
/// control. The result is a smooth function of the start state and of scale,
/// which makes finite-difference sensitivities noise-free.
inline Arc propagate_steps(const SystemSpec& spec, const State& start, std::span<const double> steps,
                           double scale = 1.0, const ExtraIntegrand& extra = {}) {
  if (steps.empty()) throw DomainError("empty step sequence");
  detail::validate_start(spec, start);
  detail::Phase y = detail::pack(start);
  detail::project(spec.space, y);
  std::vector<ArcSample> samples{detail::make_sample(y, start.t)};
  std::vector<double> scaled;
  scaled.reserve(steps.size());
  double elapsed = 0.0;
  for (const double h0 : steps) {
    const double h = h0 * scale;
    y = detail::rk_step(spec, y, h, extra).y;
    detail::project(spec.space, y);
    check_singularity(spec, y.head<3>());
    elapsed += h;
    scaled.push_back(h);
    samples.push_back(detail::make_sample(y, start.t + elapsed));
  }
  return detail::finish(spec, start, y, start.t + elapsed, std::move(samples), std::move(scaled));
}

inline State Arc::state_at(double t) const {
  if (samples.empty()) throw DomainError("arc has no samples");
  if (t <= samples.front().state.t) return samples.front().state;
  if (t >= samples.back().state.t) return samples.back().state;
  const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double value, const ArcSample& s) { return value < s.state.t; });
  const State& a = std::prev(it)->state;
  const State& b = it->state;
  const double h = b.t - a.t;
  const double x = (t - a.t) / h;
  const double x2 = x * x;
  const double x3 = x2 * x;
  const double x4 = x3 * x;
  const double x5 = x4 * x;
  const Vec3 acc_a = eom_rhs(spec, a).dv;
  const Vec3 acc_b = eom_rhs(spec, b).dv;

  const double h0 = 1.0 - 10.0 * x3 + 15.0 * x4 - 6.0 * x5;
  const double h1 = x - 6.0 * x3 + 8.0 * x4 - 3.0 * x5;
  const double h2 = 0.5 * x2 - 1.5 * x3 + 1.5 * x4 - 0.5 * x5;
  const double h4 = -4.0 * x3 + 7.0 * x4 - 3.0 * x5;
  const double h5 = 0.5 * x3 - x4 + 0.5 * x5;
  const double d0 = -30.0 * x2 + 60.0 * x3 - 30.0 * x4;
  const double d1 = 1.0 - 18.0 * x2 + 32.0 * x3 - 15.0 * x4;
  const double d2 = x - 4.5 * x2 + 6.0 * x3 - 2.5 * x4;
  const double d4 = -12.0 * x2 + 28.0 * x3 - 15.0 * x4;
  const double d5 = 1.5 * x2 - 4.0 * x3 + 2.5 * x4;

  State s;
  s.t = t;
  s.q = h0 * a.q + h1 * h * a.v + h2 * h * h * acc_a + (1.0 - h0) * b.q + h4 * h * b.v +
        h5 * h * h * acc_b;
  s.v = (d0 * (a.q - b.q)) / h + d1 * a.v + d2 * h * acc_a + d4 * b.v + d5 * h * acc_b;
  project_to_space(spec.space, s.q, s.v);
  return s;
}

struct EndpointJacobian {
  Mat2 matrix = Mat2::Zero();
  double determinant = 0.0;
};

/// Sensitivity of the arrival chart position to the departure chart velocity,
/// d B / d v_A, by central differences over a replayed step sequence.
inline EndpointJacobian endpoint_jacobian(const SystemSpec& spec, const State& start, double dt,
                                          const Tolerances& tol = {}, double fd_step = 1e-6) {
  const Arc nominal = propagate(spec, start, dt, tol);
  const ChartPoint a = chart_position(spec.space, start);
  const Vec2 va = chart_velocity(spec.space, start);
  EndpointJacobian jac;
  for (int j = 0; j < 2; ++j) {
    Vec2 dv = Vec2::Zero();
    dv(j) = fd_step;
    const State plus = make_state(spec.space, a, va + dv, start.t);
    const State minus = make_state(spec.space, a, va - dv, start.t);
    const ChartPoint b_plus = chart_position(spec.space, propagate_steps(spec, plus, nominal.steps).end);
    const ChartPoint b_minus =
        chart_position(spec.space, propagate_steps(spec, minus, nominal.steps).end);
    jac.matrix.col(j) = (b_plus - b_minus) / (2.0 * fd_step);
  }
  jac.determinant = jac.matrix.determinant();
  return jac;
}

}  // namespace curvlam
