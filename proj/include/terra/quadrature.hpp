#pragma once

#include <cmath>
#include <stdexcept>

namespace terra::quadrature {

/// Composite Simpson rule on [a, b]. `intervals` must be even and positive.
/// `Value` must value-initialize to zero and support `+=` and scalar `*`.
template <class Value, class F>
Value composite_simpson(F&& f, double a, double b, int intervals) {
  if (intervals <= 0 || intervals % 2 != 0) {
    throw std::invalid_argument("composite_simpson: intervals must be even and positive");
  }
  const double h = (b - a) / intervals;
  Value odd{};
  Value even{};
  for (int i = 1; i < intervals; i += 2) {
    odd += f(a + i * h);
  }
  for (int i = 2; i < intervals; i += 2) {
    even += f(a + i * h);
  }
  Value sum = f(a);
  sum += f(b);
  sum += odd * 4.0;
  sum += even * 2.0;
  return sum * (h / 3.0);
}

/// Composite Simpson after the substitution x = end - (end - start) * u^p, u in [0, 1].
/// Clusters nodes toward `end`, which removes the loss of order caused by an
/// integrable power-law endpoint behaviour there. Integrates from `start` to `end`
/// (signed: returns the integral over [min, max] with the usual orientation).
template <class Value, class F>
Value graded_simpson(F&& f, double start, double end, double power, int intervals) {
  const double span = end - start;
  auto mapped = [&](double u) -> Value {
    const double up = power == 2.0 ? u : power == 3.0 ? u * u : std::pow(u, power - 1.0);
    const double x = end - span * up * u;
    return f(x) * (span * power * up);
  };
  // u = 0 maps to `end`; with power > 1 the Jacobian vanishes there.
  return composite_simpson<Value>(mapped, 0.0, 1.0, intervals);
}

}  // namespace terra::quadrature
