#pragma once

#include <optional>
#include <stdexcept>

#include "terra/estimation.hpp"

namespace terra::harness {

/// Mean over all filter steps of (n_hat - n_true)^2.
inline double mse(const EstimateTrace& trace, double truth) {
  if (trace.entries.empty()) throw std::invalid_argument("mse: empty trace");
  double sum = 0.0;
  for (const TraceEntry& e : trace.entries) {
    const double err = e.mean(0) - truth;
    sum += err * err;
  }
  return sum / static_cast<double>(trace.entries.size());
}

/// First time the estimate enters truth +/- band and stays there to the end.
inline std::optional<double> convergence_time(const EstimateTrace& trace, double truth,
                                              double band = 0.05) {
  std::optional<double> entered;
  for (const TraceEntry& e : trace.entries) {
    const bool inside = std::abs(e.mean(0) - truth) <= band;
    if (!inside) {
      entered.reset();
    } else if (!entered) {
      entered = e.t;
    }
  }
  return entered;
}

}  // namespace terra::harness
