#pragma once

// Rigid-wheel / deformable-soil interaction after Bekker and Wong-Reece:
// normal and shear stress distributions over the contact arc, their force
// integrals, and the sinkage that balances a prescribed vertical load.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "terra/errors.hpp"
#include "terra/quadrature.hpp"

namespace terra {

/// Bekker soil description, SI units throughout.
///
/// `k_c` is in N/m^(n+1) and `k_phi` in N/m^(n+2); configuration files carry
/// the conventional kN-based values and are converted on load.
struct SoilParams {
  double k_c = 0.0;
  double k_phi = 0.0;
  double n = 1.0;               // sinkage exponent
  double cohesion = 0.0;        // Pa
  double friction_angle = 0.0;  // rad
  double k_x = 0.025;           // longitudinal shear modulus, m
  double k_y = 0.025;           // lateral shear modulus, m
  double a0 = 0.4;
  double a1 = 0.0;
  double b0 = 0.0;
  double b1 = 0.0;

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("SoilParams: " + what); };
    if (!(n > 0.0)) fail("n must be positive");
    if (!(k_x > 0.0) || !(k_y > 0.0)) fail("shear moduli must be positive");
    if (!(friction_angle >= 0.0 && friction_angle < std::numbers::pi / 2)) {
      fail("friction angle must lie in [0, pi/2)");
    }
    if (!(a0 > 0.0 && a0 <= 1.0)) fail("a0 must lie in (0, 1]");
    if (!(b0 >= 0.0 && b0 < a0)) fail("b0 must lie in [0, a0)");
    if (!(k_c >= 0.0 && k_phi >= 0.0)) fail("pressure-sinkage moduli must be nonnegative");
  }
};

struct WheelGeom {
  double radius = 0.33;  // m
  double width = 0.25;   // m, effective
  double mass = 20.0;    // kg

  void validate() const {
    if (!(radius > 0.0 && width > 0.0 && mass > 0.0)) {
      throw std::invalid_argument("WheelGeom: radius, width and mass must be positive");
    }
  }
};

struct WheelKinematics {
  double slip = 0.1;        // (r*omega - v_l) / (r*omega)
  double side_slip = 0.0;   // rad
  double v_l = 0.0;         // m/s, informational
};

struct ContactGeometry {
  double theta_f = 0.0;  // entry angle
  double theta_m = 0.0;  // angle of maximum normal stress
  double theta_r = 0.0;  // exit angle
  double h_f = 0.0;      // maximum sinkage, m
};

struct StressSample {
  double sigma = 0.0;
  double tau_x = 0.0;
  double tau_y = 0.0;
};

/// Force integrals in the wheel frame: longitudinal, lateral, vertical.
struct ForceIntegrals {
  double fx = 0.0;
  double fy = 0.0;
  double fz = 0.0;

  ForceIntegrals& operator+=(const ForceIntegrals& o) {
    fx += o.fx;
    fy += o.fy;
    fz += o.fz;
    return *this;
  }
  friend ForceIntegrals operator*(ForceIntegrals f, double s) {
    f.fx *= s;
    f.fy *= s;
    f.fz *= s;
    return f;
  }
};

/// Longitudinal, cornering and vertical force on one wheel plus its sinkage.
struct WheelForces {
  double F_l = 0.0;
  double F_c = 0.0;
  double F_z = 0.0;
  double h_f = 0.0;
};

namespace terramechanics {

/// Simpson intervals per branch of the contact arc.
inline constexpr int kIntervalsPerBranch = 64;
/// Upper end of the sinkage search bracket, as a fraction of wheel radius.
inline constexpr double kMaxSinkageFraction = 0.95;
inline constexpr int kMaxSolverIterations = 100;
inline constexpr double kDerivativeStep = 1e-7;  // m

/// Grading exponent for the substitution that clusters nodes at the zero-sinkage
/// end of each branch, where the integrand behaves like (distance)^n.
inline double grading_power(double n) { return n < 1.0 ? 3.0 : 2.0; }

inline double load_tolerance(double load) { return std::max(1e-8 * load, 1e-6); }

}  // namespace terramechanics

inline ContactGeometry contact_geometry(double h_f, double slip, const WheelGeom& geom,
                                        const SoilParams& soil) {
  if (!(h_f >= 0.0)) throw std::domain_error("contact_geometry: negative sinkage");
  if (!(h_f < geom.radius)) throw std::domain_error("contact_geometry: wheel buried (h_f >= r)");
  ContactGeometry cg;
  cg.h_f = h_f;
  cg.theta_f = std::acos(1.0 - h_f / geom.radius);
  cg.theta_r = std::min((soil.b0 + soil.b1 * slip) * cg.theta_f, cg.theta_f);
  cg.theta_m = std::clamp((soil.a0 + soil.a1 * slip) * cg.theta_f, cg.theta_r, cg.theta_f);
  return cg;
}

namespace detail {

// Unchecked: caller guarantees theta in [theta_r, theta_f].
inline double sinkage_at(double theta, const ContactGeometry& cg, double radius) {
  const double cos_f = std::cos(cg.theta_f);
  if (theta >= cg.theta_m || cg.theta_m <= cg.theta_r) {
    return std::max(radius * (std::cos(theta) - cos_f), 0.0);
  }
  const double theta_e =
      cg.theta_f - (theta - cg.theta_r) / (cg.theta_m - cg.theta_r) * (cg.theta_f - cg.theta_m);
  return std::max(radius * (std::cos(theta_e) - cos_f), 0.0);
}

inline double shear(double strength, double j, double modulus) {
  return strength * (1.0 - std::exp(-j / modulus));
}

// Odd in j: the lateral shear opposes side slip of either sign.
inline double lateral_shear(double strength, double j, double modulus) {
  return std::copysign(strength * (1.0 - std::exp(-std::abs(j) / modulus)), j);
}

// Per-arc constants shared by every quadrature node.
struct ArcContext {
  ContactGeometry cg;
  double radius = 0.0;
  double cos_f = 0.0;
  double sin_f = 0.0;
  double pressure = 0.0;  // k_c / b + k_phi
  double tan_phi = 0.0;
  double cohesion = 0.0;
  double n = 1.0;
  double slip = 0.0;
  double tan_beta = 0.0;
  double k_x = 1.0;
  double k_y = 1.0;

  ArcContext(const ContactGeometry& g, double s, double tb, const WheelGeom& geom,
             const SoilParams& soil)
      : cg(g),
        radius(geom.radius),
        cos_f(std::cos(g.theta_f)),
        sin_f(std::sin(g.theta_f)),
        pressure(soil.k_c / geom.width + soil.k_phi),
        tan_phi(std::tan(soil.friction_angle)),
        cohesion(soil.cohesion),
        n(soil.n),
        slip(s),
        tan_beta(tb),
        k_x(soil.k_x),
        k_y(soil.k_y) {}
};

inline StressSample stresses(double theta, double sin_t, double cos_t, const ArcContext& a,
                             bool lateral) {
  const ContactGeometry& cg = a.cg;
  double c = cos_t;
  if (theta < cg.theta_m && cg.theta_m > cg.theta_r) {
    const double theta_e =
        cg.theta_f - (theta - cg.theta_r) / (cg.theta_m - cg.theta_r) * (cg.theta_f - cg.theta_m);
    c = std::cos(theta_e);
  }
  const double h = std::max(a.radius * (c - a.cos_f), 0.0);
  StressSample s;
  s.sigma = h > 0.0 ? a.pressure * std::pow(h, a.n) : 0.0;
  const double strength = a.cohesion + s.sigma * a.tan_phi;
  const double arc = cg.theta_f - theta;
  const double j_x = a.radius * (arc - (1.0 - a.slip) * (a.sin_f - sin_t));
  s.tau_x = shear(strength, j_x, a.k_x);
  if (lateral) {
    const double j_y = a.radius * (1.0 - a.slip) * arc * a.tan_beta;
    s.tau_y = lateral_shear(strength, j_y, a.k_y);
  }
  return s;
}

inline StressSample stresses(double theta, const ContactGeometry& cg, double slip,
                             double tan_beta, const WheelGeom& geom, const SoilParams& soil,
                             bool lateral) {
  const ArcContext a(cg, slip, tan_beta, geom, soil);
  return stresses(theta, std::sin(theta), std::cos(theta), a, lateral);
}

inline ForceIntegrals integrate(const ContactGeometry& cg, double slip, double tan_beta,
                                const WheelGeom& geom, const SoilParams& soil, bool lateral) {
  if (cg.h_f <= 0.0) return {};
  const double rb = geom.radius * geom.width;
  const ArcContext ctx(cg, slip, tan_beta, geom, soil);
  auto integrand = [&](double theta) {
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    const StressSample s = stresses(theta, sn, c, ctx, lateral);
    return ForceIntegrals{rb * (s.tau_x * c - s.sigma * sn), -rb * s.tau_y,
                          rb * (s.tau_x * sn + s.sigma * c)};
  };
  const double p = terramechanics::grading_power(soil.n);
  constexpr int kN = terramechanics::kIntervalsPerBranch;
  // Front branch vanishes at theta_f, rear branch at theta_r.
  ForceIntegrals total =
      quadrature::graded_simpson<ForceIntegrals>(integrand, cg.theta_m, cg.theta_f, p, kN);
  if (cg.theta_m > cg.theta_r) {
    total += quadrature::graded_simpson<ForceIntegrals>(integrand, cg.theta_m, cg.theta_r, p, kN) *
             -1.0;
  }
  return total;
}

}  // namespace detail

/// Piecewise sinkage h(theta) over the contact arc.
inline double sinkage_profile(double theta, const ContactGeometry& cg, const WheelGeom& geom) {
  constexpr double kSlack = 1e-12;
  if (theta < cg.theta_r - kSlack || theta > cg.theta_f + kSlack) {
    throw std::domain_error("sinkage_profile: angle outside the contact arc");
  }
  return detail::sinkage_at(std::clamp(theta, cg.theta_r, cg.theta_f), cg, geom.radius);
}

inline StressSample stresses_at(double theta, const ContactGeometry& cg,
                                const WheelKinematics& kin, const WheelGeom& geom,
                                const SoilParams& soil) {
  sinkage_profile(theta, cg, geom);  // domain check
  return detail::stresses(std::clamp(theta, cg.theta_r, cg.theta_f), cg, kin.slip,
                          std::tan(kin.side_slip), geom, soil, true);
}

inline ForceIntegrals integrate_forces(double h_f, const WheelKinematics& kin,
                                       const WheelGeom& geom, const SoilParams& soil) {
  const ContactGeometry cg = contact_geometry(h_f, kin.slip, geom, soil);
  return detail::integrate(cg, kin.slip, std::tan(kin.side_slip), geom, soil, true);
}

/// Vertical force only; independent of side slip.
inline double vertical_force(double h_f, double slip, const WheelGeom& geom,
                             const SoilParams& soil) {
  const ContactGeometry cg = contact_geometry(h_f, slip, geom, soil);
  return detail::integrate(cg, slip, 0.0, geom, soil, false).fz;
}

namespace detail {

struct SolverOptions {
  bool polish = true;                // final chord step below the tolerance
  ForceIntegrals* forces = nullptr;  // if set, receives the full forces at the root
};

// Solver body; `f_init` is the residual already known at `h_init` (NaN if not).
inline double solve_sinkage_from(double load, const WheelKinematics& kin, const WheelGeom& geom,
                                 const SoilParams& soil, double h_init, double f_init,
                                 SolverOptions opt = {}) {
  using namespace terramechanics;
  const double tol = load_tolerance(load);
  const double h_max = kMaxSinkageFraction * geom.radius;
  const double tan_beta = std::tan(kin.side_slip);
  const bool full = opt.forces != nullptr;
  ForceIntegrals last;
  double last_h = std::numeric_limits<double>::quiet_NaN();
  auto residual = [&](double h) {
    const ContactGeometry cg = contact_geometry(h, kin.slip, geom, soil);
    last = integrate(cg, kin.slip, tan_beta, geom, soil, full);
    last_h = h;
    return last.fz - load;
  };
  // Root found: hand back the forces at `h`, recomputing only if the last
  // evaluation was elsewhere (derivative probe).
  auto finish = [&](double h) {
    if (full) *opt.forces = last_h == h ? last : integrate_forces(h, kin, geom, soil);
    return h;
  };

  double lo = 0.0;
  double hi = h_max;
  bool hi_verified = false;
  auto verify_upper = [&] {
    if (hi_verified) return;
    if (residual(h_max) < 0.0) {
      throw NoBracketError("solve_sinkage: load " + std::to_string(load) +
                           " N exceeds soil capacity at 0.95 r");
    }
    hi_verified = true;
  };
  // Forward difference; one extra force evaluation per Newton step.
  auto slope_at = [&](double h, double f) {
    return (residual(h + kDerivativeStep) - f) / kDerivativeStep;
  };

  const bool warm = h_init > 0.0 && h_init < h_max;
  double h = warm ? h_init : 0.25 * h_max;
  double f = warm && std::isfinite(f_init) ? f_init : residual(h);
  double slope = std::numeric_limits<double>::quiet_NaN();
  bool bisect_next = false;

  for (int it = 0; it < kMaxSolverIterations; ++it) {
    if (std::abs(f) <= tol) {
      if (it == 0 || !opt.polish) return finish(h);
      if (!(slope > 0.0)) {
        slope = slope_at(h, f);
        if (!(slope > 0.0)) return finish(h);
      }
      // One more (chord) Newton step tightens the root well below tol,
      // unless it would move by less than rounding anyway.
      const double shift = f / slope;
      if (std::abs(shift) <= 1e-13) return finish(h);
      const double h_polish = h - shift;
      if (h_polish > lo && h_polish < hi) {
        const double f_polish = residual(h_polish);
        if (std::abs(f_polish) <= std::abs(f)) return finish(h_polish);
      }
      return finish(h);
    }
    if (f < 0.0) {
      lo = h;
    } else {
      hi = h;
      hi_verified = true;
    }

    double h_next = std::numeric_limits<double>::quiet_NaN();
    if (!bisect_next) {
      slope = slope_at(h, f);
      h_next = h - f / slope;
    }
    bool newton = !bisect_next && slope > 0.0 && std::isfinite(h_next) && h_next > lo;
    if (newton && h_next >= hi) {
      newton = false;
    }
    if (!newton) {
      verify_upper();
      h_next = 0.5 * (lo + hi);
    }
    const double f_next = residual(h_next);
    bisect_next = newton && std::abs(f_next) >= std::abs(f);
    if (!newton) slope = std::numeric_limits<double>::quiet_NaN();
    h = h_next;
    f = f_next;
  }
  throw NonConvergenceError("solve_sinkage: no convergence in " +
                            std::to_string(kMaxSolverIterations) + " iterations (load " +
                            std::to_string(load) + " N)");
}

inline void check_solver_inputs(double load, double h_init, const WheelGeom& geom) {
  if (!(load >= 0.0) || !std::isfinite(load)) {
    throw std::domain_error("solve_sinkage: load must be finite and nonnegative");
  }
  if (!(h_init >= 0.0 && h_init < geom.radius)) {
    throw std::domain_error("solve_sinkage: initial sinkage outside [0, r)");
  }
}

}  // namespace detail

/// Sinkage h_f with F_z(h_f) = load. Newton-Raphson on a finite-difference
/// derivative, falling back to bisection on [0, 0.95 r] whenever a Newton step
/// leaves the bracket or fails to reduce the residual. `h_init` is a warm start;
/// pass 0 for a cold start.
inline double solve_sinkage(double load, const WheelKinematics& kin, const WheelGeom& geom,
                            const SoilParams& soil, double h_init) {
  detail::check_solver_inputs(load, h_init, geom);
  if (load == 0.0) return 0.0;
  return detail::solve_sinkage_from(load, kin, geom, soil, h_init,
                                    std::numeric_limits<double>::quiet_NaN());
}

/// Solves the sinkage for `load` and returns the resulting wheel-frame forces.
inline WheelForces wheel_interaction(double load, const WheelKinematics& kin,
                                     const WheelGeom& geom, const SoilParams& soil,
                                     double h_prev) {
  detail::check_solver_inputs(load, h_prev, geom);
  if (load == 0.0) return WheelForces{};
  // The full integration at the warm start doubles as the solver's first residual.
  double f_init = std::numeric_limits<double>::quiet_NaN();
  if (h_prev > 0.0 && h_prev < terramechanics::kMaxSinkageFraction * geom.radius) {
    const ForceIntegrals f = integrate_forces(h_prev, kin, geom, soil);
    if (std::abs(f.fz - load) <= terramechanics::load_tolerance(load)) {
      return WheelForces{f.fx, f.fy, f.fz, h_prev};
    }
    f_init = f.fz - load;
  }
  ForceIntegrals f;
  const double h_f =
      detail::solve_sinkage_from(load, kin, geom, soil, h_prev, f_init, {false, &f});
  return WheelForces{f.fx, f.fy, f.fz, h_f};
}

struct SideSlip {
  double front = 0.0;
  double rear = 0.0;
};

/// Side-slip angles of the front (steered) and rear wheels from body velocities.
inline SideSlip side_slip_angles(double xdot, double ydot, double psidot, double steer,
                                 double l_f, double l_r) {
  constexpr double kRest = 1e-6;
  auto angle = [](double num, double den) {
    if (std::abs(den) < kRest && std::abs(num) < kRest) return 0.0;
    return std::atan2(num, den);
  };
  const double lat_f = ydot + l_f * psidot;
  const double c = std::cos(steer);
  const double s = std::sin(steer);
  SideSlip out;
  out.front = angle(lat_f * c - xdot * s, lat_f * s + xdot * c);
  out.rear = angle(ydot - l_r * psidot, xdot);
  return out;
}

}  // namespace terra
