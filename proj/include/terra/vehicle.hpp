#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "terra/terramechanics.hpp"

namespace terra {

inline constexpr double kGravity = 9.81;  // m/s^2

struct VehicleParams {
  double mass = 1000.0;          // sprung mass, kg
  double yaw_inertia = 1200.0;   // I_z, kg m^2
  double pitch_inertia = 900.0;  // I_y, kg m^2
  double l_f = 1.2;              // CG to front axle, m
  double l_r = 1.0;              // CG to rear axle, m
  double k_f = 20000.0;          // N/m
  double k_r = 20000.0;          // N/m
  double c_f = 2000.0;           // N s/m
  double c_r = 2000.0;           // N s/m
  WheelGeom wheel;
  double slip = 0.1;             // constant slip ratio

  void validate() const {
    auto fail = [](const std::string& what) {
      throw std::invalid_argument("VehicleParams: " + what);
    };
    if (!(mass > 0.0 && yaw_inertia > 0.0 && pitch_inertia > 0.0)) {
      fail("mass and inertias must be positive");
    }
    if (!(l_f > 0.0 && l_r > 0.0)) fail("axle distances must be positive");
    if (!(k_f > 0.0 && k_r > 0.0)) fail("suspension stiffnesses must be positive");
    if (!(c_f >= 0.0 && c_r >= 0.0)) fail("damping must be nonnegative");
    if (!std::isfinite(slip)) fail("slip must be finite");
    wheel.validate();
  }
};

enum class Axle { front, rear };

/// Time-integrated coordinates plus the per-step memory the coupled model needs.
struct VehicleState {
  // planar (global pose, body-frame velocities)
  double X = 0.0;
  double Y = 0.0;
  double psi = 0.0;
  double xdot = 0.0;
  double ydot = 0.0;
  double psidot = 0.0;
  // vertical, measured from static equilibrium
  double z = 0.0;
  double theta = 0.0;
  double zdot = 0.0;
  double thetadot = 0.0;

  // memory, refreshed once per full step
  double sinkage_front = 0.0;
  double sinkage_rear = 0.0;
  double xddot_prev = 0.0;
  double yddot_prev = 0.0;
  double psiddot_prev = 0.0;
};

inline constexpr std::size_t kCoordinateCount = 10;
using Coordinates = std::array<double, kCoordinateCount>;

inline Coordinates coordinates_of(const VehicleState& s) {
  return {s.X, s.Y, s.psi, s.xdot, s.ydot, s.psidot, s.z, s.theta, s.zdot, s.thetadot};
}

inline void assign_coordinates(VehicleState& s, const Coordinates& q) {
  s.X = q[0];
  s.Y = q[1];
  s.psi = q[2];
  s.xdot = q[3];
  s.ydot = q[4];
  s.psidot = q[5];
  s.z = q[6];
  s.theta = q[7];
  s.zdot = q[8];
  s.thetadot = q[9];
}

/// Time derivative of the ten coordinates.
struct StateDerivative {
  double Xdot = 0.0;
  double Ydot = 0.0;
  double psidot = 0.0;
  double xddot = 0.0;
  double yddot = 0.0;
  double psiddot = 0.0;
  double zdot = 0.0;
  double thetadot = 0.0;
  double zddot = 0.0;
  double thetaddot = 0.0;

  Coordinates as_array() const {
    return {Xdot, Ydot, psidot, xddot, yddot, psiddot, zdot, thetadot, zddot, thetaddot};
  }
};

/// offset + amplitude * sin(frequency * t + phase), optionally scaled by the
/// vehicle mass (so that `m(0.8 + 0.5 sin 0.8t)` is offset 0.8, amplitude 0.5).
struct Schedule {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;  // rad/s
  double phase = 0.0;      // rad
  bool per_unit_mass = false;

  static Schedule constant(double value) { return Schedule{value}; }
  static Schedule sinusoid(double offset, double amplitude, double frequency) {
    return Schedule{offset, amplitude, frequency};
  }

  bool is_constant() const { return amplitude == 0.0; }

  double value(double t, double mass = 1.0) const {
    const double v = offset + amplitude * std::sin(frequency * t + phase);
    return per_unit_mass ? mass * v : v;
  }
};

struct InputSignal {
  Schedule force;  // F_u, N (or N/kg when per_unit_mass)
  Schedule steer;  // delta, rad
};

struct InputSample {
  double force = 0.0;
  double steer = 0.0;
};

inline InputSample sample_inputs(const InputSignal& in, double t, double mass) {
  return {in.force.value(t, mass), in.steer.value(t)};
}

/// Body-frame IMU quantities.
struct ImuObservation {
  double a_x = 0.0;
  double a_y = 0.0;
  double a_z = 0.0;
  double w_y = 0.0;
  double w_z = 0.0;
};

inline constexpr std::size_t kImuChannels = 5;

inline std::array<double, kImuChannels> as_array(const ImuObservation& o) {
  return {o.a_x, o.a_y, o.a_z, o.w_y, o.w_z};
}

/// Static per-axle normal reaction, (1/2) m g.
inline double static_normal(const VehicleParams& p) { return 0.5 * p.mass * kGravity; }

struct NormalReaction {
  double value = 0.0;
  bool liftoff = false;
};

inline double axle_distance(Axle axle, const VehicleParams& p) {
  return axle == Axle::front ? p.l_f : p.l_r;
}

/// Vertical position and velocity of an axle attachment point.
inline std::array<double, 2> axle_motion(Axle axle, const VehicleState& s, const VehicleParams& p) {
  const double sign = axle == Axle::front ? 1.0 : -1.0;
  const double l = axle_distance(axle, p);
  return {s.z + sign * l * std::sin(s.theta), s.zdot + sign * l * std::cos(s.theta) * s.thetadot};
}

/// N = (1/2) m g - k (z_axle - z_g) - c (zdot_axle - zdot_g) + m_w Hddot,
/// clamped at zero when the wheel would lift off.
inline NormalReaction dynamic_normal(Axle axle, const VehicleState& s, double z_g, double zdot_g,
                                     double h_ddot, const VehicleParams& p) {
  const double k = axle == Axle::front ? p.k_f : p.k_r;
  const double c = axle == Axle::front ? p.c_f : p.c_r;
  const auto [z_a, zdot_a] = axle_motion(axle, s, p);
  const double n = static_normal(p) - k * (z_a - z_g) - c * (zdot_a - zdot_g) +
                   p.wheel.mass * h_ddot;
  if (n < 0.0) return {0.0, true};
  return {n, false};
}

struct PlanarDerivative {
  double Xdot = 0.0;
  double Ydot = 0.0;
  double psidot = 0.0;
  double xddot = 0.0;
  double yddot = 0.0;
  double psiddot = 0.0;
};

/// Longitudinal, lateral and yaw dynamics with the pitch/heave coupling terms,
/// plus the global-frame kinematics.
inline PlanarDerivative bicycle_derivatives(const VehicleState& s, const InputSample& u,
                                            const WheelForces& front, const WheelForces& rear,
                                            const VehicleParams& p) {
  const double cd = std::cos(u.steer);
  const double sd = std::sin(u.steer);
  const double ct = std::cos(s.theta);
  const double st = std::sin(s.theta);
  const double lateral_front = front.F_l * sd + front.F_c * cd;

  PlanarDerivative d;
  d.Xdot = s.xdot * std::cos(s.psi) - s.ydot * std::sin(s.psi);
  d.Ydot = s.xdot * std::sin(s.psi) + s.ydot * std::cos(s.psi);
  d.psidot = s.psidot;
  d.xddot = (s.ydot * s.psidot * ct + s.zdot * s.thetadot) +
            (front.F_l * cd - front.F_c * sd + rear.F_l + u.force) / p.mass;
  d.yddot = (s.zdot * s.psidot * st - s.xdot * s.psidot * ct) +
            (lateral_front + rear.F_c) / p.mass;
  d.psiddot = (lateral_front * p.l_f - rear.F_c * p.l_r) / p.yaw_inertia;
  return d;
}

struct VerticalAcceleration {
  double zddot = 0.0;
  double thetaddot = 0.0;
};

/// Half-car heave and pitch with ground displacements z_g under each axle.
inline VerticalAcceleration halfcar_derivatives(const VehicleState& s, double z_fg, double z_rg,
                                                double zdot_fg, double zdot_rg,
                                                const VehicleParams& p) {
  const auto [z_f, zdot_f] = axle_motion(Axle::front, s, p);
  const auto [z_r, zdot_r] = axle_motion(Axle::rear, s, p);
  const double force_f = p.k_f * (z_f - z_fg) + p.c_f * (zdot_f - zdot_fg);
  const double force_r = p.k_r * (z_r - z_rg) + p.c_r * (zdot_r - zdot_rg);
  VerticalAcceleration a;
  a.zddot = -(force_r + force_f) / p.mass;
  a.thetaddot = (force_r * p.l_r - force_f * p.l_f) * std::cos(s.theta) / p.pitch_inertia;
  return a;
}

enum class ModelKind { coupled, bicycle };

inline std::string to_string(ModelKind k) { return k == ModelKind::coupled ? "coupled" : "bicycle"; }

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "coupled" || s == "halfcar" || s == "half-car") return ModelKind::coupled;
  if (s == "bicycle") return ModelKind::bicycle;
  throw std::invalid_argument("unknown model '" + s + "' (expected coupled|bicycle)");
}

/// IMU readout. The bicycle variant has no vertical dynamics, so a_z and w_y
/// are reported as zero and never used by its estimator.
inline ImuObservation imu_output(const VehicleState& s, const StateDerivative& d) {
  return ImuObservation{d.xddot, d.yddot, d.zddot, s.thetadot, s.psidot};
}

}  // namespace terra
