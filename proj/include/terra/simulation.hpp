#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "terra/errors.hpp"
#include "terra/terrain_field.hpp"
#include "terra/terramechanics.hpp"
#include "terra/vehicle.hpp"

namespace terra {

/// Everything a derivative evaluation needs besides the state and time.
struct VehicleModel {
  ModelKind kind = ModelKind::coupled;
  VehicleParams params;
  SoilParams soil;
  TerrainField terrain;
  InputSignal inputs;
  /// Sinkage under the static load; the datum for ground displacement.
  double static_sinkage = 0.0;
};

inline WheelKinematics wheel_kinematics(const VehicleParams& p, double side_slip) {
  return WheelKinematics{p.slip, side_slip, 0.0};
}

inline double solve_static_sinkage(const VehicleParams& p, const SoilParams& soil) {
  return solve_sinkage(static_normal(p), wheel_kinematics(p, 0.0), p.wheel, soil, 0.0);
}

inline VehicleModel make_model(ModelKind kind, const VehicleParams& params, const SoilParams& soil,
                               TerrainField terrain, InputSignal inputs) {
  params.validate();
  soil.validate();
  VehicleModel m{kind, params, soil, std::move(terrain), inputs, 0.0};
  m.static_sinkage = solve_static_sinkage(params, soil);
  return m;
}

/// Same model with a different sinkage exponent.
inline VehicleModel with_sinkage_exponent(const VehicleModel& base, double n) {
  VehicleModel m = base;
  m.soil.n = n;
  m.static_sinkage = solve_static_sinkage(m.params, m.soil);
  return m;
}

/// Per-axle quantities produced by one derivative evaluation.
struct AxleReport {
  double normal = 0.0;
  bool liftoff = false;
  WheelForces forces;
  double ground = 0.0;       // z_g
  double ground_rate = 0.0;  // zdot_g
};

struct Evaluation {
  StateDerivative derivative;
  AxleReport front;
  AxleReport rear;
  InputSample input;
};

struct ContactPoint {
  double x = 0.0, y = 0.0;
  double vx = 0.0, vy = 0.0;
  double ax = 0.0, ay = 0.0;
};

/// Planar position, velocity and (previous-step) acceleration of the point
/// below an axle, projected through the current yaw.
inline ContactPoint contact_point(Axle axle, const VehicleState& s, const VehicleParams& p) {
  const double offset = axle == Axle::front ? p.l_f : -p.l_r;
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  const double vX = s.xdot * c - s.ydot * sn;
  const double vY = s.xdot * sn + s.ydot * c;
  const double along = s.xddot_prev - s.ydot * s.psidot;
  const double across = s.yddot_prev + s.xdot * s.psidot;
  const double aX = along * c - across * sn;
  const double aY = along * sn + across * c;
  const double w = s.psidot;
  const double wdot = s.psiddot_prev;
  ContactPoint cp;
  cp.x = s.X + offset * c;
  cp.y = s.Y + offset * sn;
  cp.vx = vX - offset * sn * w;
  cp.vy = vY + offset * c * w;
  cp.ax = aX - offset * (c * w * w + sn * wdot);
  cp.ay = aY - offset * (sn * w * w - c * wdot);
  return cp;
}

namespace detail {

inline AxleReport resolve_axle(Axle axle, const VehicleState& s, double side_slip,
                               const VehicleModel& m) {
  const VehicleParams& p = m.params;
  const bool front = axle == Axle::front;
  const double memory = front ? s.sinkage_front : s.sinkage_rear;
  AxleReport r;
  if (m.kind == ModelKind::bicycle) {
    r.normal = static_normal(p);
  } else {
    const ContactPoint cp = contact_point(axle, s, p);
    const double height = elevation(m.terrain, cp.x, cp.y);
    const PathHeightRates rates =
        path_height_rates(m.terrain, cp.x, cp.y, cp.vx, cp.vy, cp.ax, cp.ay);
    r.ground = height - (memory - m.static_sinkage);
    // sinkage enters the ground height but not its rate: a finite-difference
    // rate through the damper is an unstable explicit feedback at these step sizes
    r.ground_rate = rates.rate;
    const NormalReaction n = dynamic_normal(axle, s, r.ground, r.ground_rate, rates.accel, p);
    r.normal = n.value;
    r.liftoff = n.liftoff;
  }
  r.forces = wheel_interaction(r.normal, wheel_kinematics(p, side_slip), p.wheel, m.soil,
                               std::min(memory, 0.9 * p.wheel.radius));
  return r;
}

}  // namespace detail

/// Full right-hand side at (state, t); sinkage memory is read, never written.
inline Evaluation evaluate(const VehicleState& s, double t, const VehicleModel& m) {
  const VehicleParams& p = m.params;
  Evaluation e;
  e.input = sample_inputs(m.inputs, t, p.mass);
  const SideSlip beta = side_slip_angles(s.xdot, s.ydot, s.psidot, e.input.steer, p.l_f, p.l_r);
  e.front = detail::resolve_axle(Axle::front, s, beta.front, m);
  e.rear = detail::resolve_axle(Axle::rear, s, beta.rear, m);

  const PlanarDerivative planar = bicycle_derivatives(s, e.input, e.front.forces, e.rear.forces, p);
  StateDerivative& d = e.derivative;
  d.Xdot = planar.Xdot;
  d.Ydot = planar.Ydot;
  d.psidot = planar.psidot;
  d.xddot = planar.xddot;
  d.yddot = planar.yddot;
  d.psiddot = planar.psiddot;
  if (m.kind == ModelKind::coupled) {
    const VerticalAcceleration v = halfcar_derivatives(s, e.front.ground, e.rear.ground,
                                                       e.front.ground_rate, e.rear.ground_rate, p);
    d.zdot = s.zdot;
    d.thetadot = s.thetadot;
    d.zddot = v.zddot;
    d.thetaddot = v.thetaddot;
  }
  return e;
}

struct StepDiagnostics {
  int liftoff_events = 0;  // stages with a clamped normal reaction
};

struct StepResult {
  VehicleState state;
  StepDiagnostics diagnostics;
  Evaluation final_stage;
};

/// One classical RK4 step. Sinkage memory and stored accelerations are held
/// over the four stages and refreshed from the last one.
inline StepResult rk4_step(const VehicleState& s, double t, double dt, const VehicleModel& m) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  const Coordinates q0 = coordinates_of(s);
  StepDiagnostics diag;
  auto stage = [&](const Coordinates& q, double tau) {
    VehicleState probe = s;
    assign_coordinates(probe, q);
    Evaluation e = evaluate(probe, tau, m);
    diag.liftoff_events += int(e.front.liftoff) + int(e.rear.liftoff);
    return e;
  };
  auto shifted = [&](const Coordinates& k, double h) {
    Coordinates q = q0;
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += h * k[i];
    return q;
  };

  const Coordinates k1 = stage(q0, t).derivative.as_array();
  const Coordinates k2 = stage(shifted(k1, 0.5 * dt), t + 0.5 * dt).derivative.as_array();
  const Coordinates k3 = stage(shifted(k2, 0.5 * dt), t + 0.5 * dt).derivative.as_array();
  Evaluation last = stage(shifted(k3, dt), t + dt);
  const Coordinates k4 = last.derivative.as_array();

  Coordinates q = q0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!std::isfinite(q[i])) throw SimulationError(t, "non-finite state after RK4 step");
  }

  StepResult out{s, diag, last};
  assign_coordinates(out.state, q);
  out.state.sinkage_front = last.front.forces.h_f;
  out.state.sinkage_rear = last.rear.forces.h_f;
  out.state.xddot_prev = last.derivative.xddot;
  out.state.yddot_prev = last.derivative.yddot;
  out.state.psiddot_prev = last.derivative.psiddot;
  if (m.kind == ModelKind::bicycle) {
    out.state.z = out.state.theta = out.state.zdot = out.state.thetadot = 0.0;
  }
  return out;
}

inline StepResult coupled_step(const VehicleState& s, double t, double dt, const VehicleModel& m) {
  if (m.kind != ModelKind::coupled) throw std::invalid_argument("coupled_step: bicycle model");
  return rk4_step(s, t, dt, m);
}

inline StepResult bicycle_step(const VehicleState& s, double t, double dt, const VehicleModel& m) {
  if (m.kind != ModelKind::bicycle) throw std::invalid_argument("bicycle_step: coupled model");
  return rk4_step(s, t, dt, m);
}

/// Wraps the step and turns solver failures into time-stamped errors.
inline StepResult advance(const VehicleState& s, double t, double dt, const VehicleModel& m) {
  try {
    return rk4_step(s, t, dt, m);
  } catch (const SimulationError&) {
    throw;
  } catch (const std::exception& e) {
    throw SimulationError(t, e.what());
  }
}

struct PlanarStart {
  double X = 0.0;
  double Y = 0.0;
  double psi = 0.0;
  double xdot = 0.0;
  double ydot = 0.0;
  double psidot = 0.0;
};

/// Initial state at rest in the suspension: static sinkage in memory and, for
/// the coupled model, heave/pitch matched to the ground under each axle.
inline VehicleState settled_state(const VehicleModel& m, const PlanarStart& start) {
  VehicleState s;
  s.X = start.X;
  s.Y = start.Y;
  s.psi = start.psi;
  s.xdot = start.xdot;
  s.ydot = start.ydot;
  s.psidot = start.psidot;
  s.sinkage_front = s.sinkage_rear = m.static_sinkage;
  if (m.kind == ModelKind::coupled) {
    const VehicleParams& p = m.params;
    const ContactPoint f = contact_point(Axle::front, s, p);
    const ContactPoint r = contact_point(Axle::rear, s, p);
    const double zf = elevation(m.terrain, f.x, f.y);
    const double zr = elevation(m.terrain, r.x, r.y);
    const double base = p.l_f + p.l_r;
    s.theta = std::asin(std::clamp((zf - zr) / base, -1.0, 1.0));
    s.z = zf - p.l_f * std::sin(s.theta);
  }
  return s;
}

struct Sample {
  double t = 0.0;
  VehicleState state;
  AxleReport front;
  AxleReport rear;
  ImuObservation imu;
};

struct Trajectory {
  ModelKind kind = ModelKind::coupled;
  std::vector<Sample> samples;
  int liftoff_events = 0;
};

inline Sample make_sample(const VehicleState& s, double t, const VehicleModel& m) {
  const Evaluation e = evaluate(s, t, m);
  return Sample{t, s, e.front, e.rear, imu_output(s, e.derivative)};
}

struct SimulationConfig {
  double duration = 50.0;    // s
  double dt = 1e-3;          // s
  double output_rate = 100;  // Hz
};

/// Number of integration steps per output sample; throws if the output period
/// is not an integer multiple of dt.
inline std::size_t steps_per_period(double dt, double rate) {
  const double ratio = 1.0 / (rate * dt);
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
    throw std::invalid_argument("output period must be an integer multiple of dt");
  }
  return static_cast<std::size_t>(rounded);
}

inline std::size_t step_count(double duration, double dt) {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

/// Fixed-step run from `initial`; one sample per output period, starting at t = 0.
inline Trajectory simulate(const VehicleModel& m, const VehicleState& initial,
                           const SimulationConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.duration >= 0.0)) {
    throw std::invalid_argument("simulate: need dt > 0 and duration >= 0");
  }
  const std::size_t stride = steps_per_period(cfg.dt, cfg.output_rate);
  const std::size_t total = step_count(cfg.duration, cfg.dt);
  Trajectory traj;
  traj.kind = m.kind;
  traj.samples.reserve(total / stride + 1);
  VehicleState s = initial;
  try {
    traj.samples.push_back(make_sample(s, 0.0, m));
  } catch (const std::exception& e) {
    throw SimulationError(0.0, e.what());
  }
  for (std::size_t i = 0; i < total; ++i) {
    const double t = static_cast<double>(i) * cfg.dt;
    StepResult r = advance(s, t, cfg.dt, m);
    traj.liftoff_events += r.diagnostics.liftoff_events;
    s = r.state;
    if ((i + 1) % stride == 0) {
      const double ts = static_cast<double>(i + 1) * cfg.dt;
      try {
        traj.samples.push_back(make_sample(s, ts, m));
      } catch (const std::exception& e) {
        throw SimulationError(ts, e.what());
      }
    }
  }
  return traj;
}

inline double planar_separation(const VehicleState& a, const VehicleState& b) {
  return std::hypot(a.X - b.X, a.Y - b.Y);
}

namespace csv {

inline std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline constexpr const char* kTrajectoryHeader =
    "t,X,Y,psi,xdot,ydot,psidot,z,theta,zdot,thetadot,Nf,Nr,Flf,Fcf,Flr,Fcr,hf_f,hf_r,ax,ay,az,wy,wz";

inline void write_trajectory(std::ostream& os, const Trajectory& traj) {
  os << kTrajectoryHeader << '\n';
  for (const Sample& s : traj.samples) {
    const VehicleState& q = s.state;
    const double row[] = {s.t,
                          q.X,
                          q.Y,
                          q.psi,
                          q.xdot,
                          q.ydot,
                          q.psidot,
                          q.z,
                          q.theta,
                          q.zdot,
                          q.thetadot,
                          s.front.normal,
                          s.rear.normal,
                          s.front.forces.F_l,
                          s.front.forces.F_c,
                          s.rear.forces.F_l,
                          s.rear.forces.F_c,
                          s.front.forces.h_f,
                          s.rear.forces.h_f,
                          s.imu.a_x,
                          s.imu.a_y,
                          s.imu.a_z,
                          s.imu.w_y,
                          s.imu.w_z};
    bool first = true;
    for (double v : row) {
      if (!first) os << ',';
      os << number(v);
      first = false;
    }
    os << '\n';
  }
}

}  // namespace csv

}  // namespace terra
