#pragma once

#include <cmath>
#include <functional>
#include <string_view>
#include <utility>
#include <variant>

namespace terra {

/// First and second spatial derivatives of an elevation field at one point.
struct TerrainDerivatives {
  double dx = 0.0;
  double dy = 0.0;
  double dxx = 0.0;
  double dxy = 0.0;
  double dyy = 0.0;
};

/// Elevation rate and acceleration seen by a point moving over the field.
struct PathHeightRates {
  double rate = 0.0;   // m/s
  double accel = 0.0;  // m/s^2
};

struct FlatTerrain {};

/// H(X,Y) = amplitude * sin^2(kx X) * cos(ky Y).
struct SinusoidalTerrain {
  double amplitude = 0.05;  // m
  double kx = 0.5;          // rad/m
  double ky = 1.5;          // rad/m
};

/// Caller-provided closed form. Both callables must be pure.
struct AnalyticTerrain {
  std::function<double(double, double)> height;
  std::function<TerrainDerivatives(double, double)> derivatives;
};

class TerrainField {
 public:
  using Variant = std::variant<FlatTerrain, SinusoidalTerrain, AnalyticTerrain>;

  TerrainField() = default;
  TerrainField(FlatTerrain f) : profile_(f) {}
  TerrainField(SinusoidalTerrain s) : profile_(s) {}
  TerrainField(AnalyticTerrain a) : profile_(std::move(a)) {}

  static TerrainField flat() { return TerrainField(FlatTerrain{}); }
  static TerrainField sinusoidal(double amplitude) {
    return TerrainField(SinusoidalTerrain{amplitude});
  }

  const Variant& profile() const { return profile_; }

  std::string_view kind() const {
    switch (profile_.index()) {
      case 0: return "flat";
      case 1: return "sinusoidal";
      default: return "analytic";
    }
  }

 private:
  Variant profile_{FlatTerrain{}};
};

namespace detail {

inline double elevation_of(const FlatTerrain&, double, double) { return 0.0; }

inline double elevation_of(const SinusoidalTerrain& s, double x, double y) {
  const double sx = std::sin(s.kx * x);
  return s.amplitude * sx * sx * std::cos(s.ky * y);
}

inline double elevation_of(const AnalyticTerrain& a, double x, double y) {
  return a.height(x, y);
}

inline TerrainDerivatives derivatives_of(const FlatTerrain&, double, double) {
  return {};
}

inline TerrainDerivatives derivatives_of(const SinusoidalTerrain& s, double x, double y) {
  const double sx = std::sin(s.kx * x);
  const double s2x = std::sin(2.0 * s.kx * x);
  const double c2x = std::cos(2.0 * s.kx * x);
  const double cy = std::cos(s.ky * y);
  const double sy = std::sin(s.ky * y);
  const double h0 = s.amplitude;
  TerrainDerivatives d;
  d.dx = h0 * s.kx * s2x * cy;
  d.dy = -h0 * s.ky * sx * sx * sy;
  d.dxx = 2.0 * h0 * s.kx * s.kx * c2x * cy;
  d.dxy = -h0 * s.kx * s.ky * s2x * sy;
  d.dyy = -h0 * s.ky * s.ky * sx * sx * cy;
  return d;
}

inline TerrainDerivatives derivatives_of(const AnalyticTerrain& a, double x, double y) {
  return a.derivatives(x, y);
}

}  // namespace detail

inline double elevation(const TerrainField& field, double x, double y) {
  return std::visit([&](const auto& p) { return detail::elevation_of(p, x, y); },
                    field.profile());
}

inline TerrainDerivatives spatial_derivatives(const TerrainField& field, double x, double y) {
  return std::visit([&](const auto& p) { return detail::derivatives_of(p, x, y); },
                    field.profile());
}

/// Chain rule along a planar path (x(t), y(t)).
inline PathHeightRates path_height_rates(const TerrainField& field, double x, double y,
                                         double vx, double vy, double ax, double ay) {
  const TerrainDerivatives d = spatial_derivatives(field, x, y);
  PathHeightRates r;
  r.rate = d.dx * vx + d.dy * vy;
  r.accel = d.dxx * vx * vx + 2.0 * d.dxy * vx * vy + d.dyy * vy * vy + d.dx * ax + d.dy * ay;
  return r;
}

}  // namespace terra
