#pragma once

#include <stdexcept>
#include <string>

namespace terra {

/// Base for failures of the numerical machinery (as opposed to bad input).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iteration cap reached without meeting the residual tolerance.
class NonConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Requested load exceeds what the soil can carry before the wheel is buried.
class NoBracketError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A step failed during time integration; carries the simulation time.
class SimulationError : public NumericalError {
 public:
  SimulationError(double time, const std::string& what)
      : NumericalError("t=" + std::to_string(time) + " s: " + what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Scenario or configuration content is invalid.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace terra
