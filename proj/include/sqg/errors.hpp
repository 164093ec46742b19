#pragma once

#include <stdexcept>
#include <string>

namespace sqg {

/// Input that violates a documented precondition (non-finite samples,
/// out-of-range parameters, malformed specs).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arguments that are individually valid but structurally incompatible,
/// e.g. fields living on different geometries.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A time step larger than the advective CFL limit allows.
class CflViolation : public std::runtime_error {
 public:
  CflViolation(double requested, double required)
      : std::runtime_error("time step " + std::to_string(requested) +
                           " exceeds CFL limit " + std::to_string(required)),
        requested_dt(requested),
        required_dt(required) {}

  double requested_dt;
  double required_dt;
};

/// Non-finite values produced during integration.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sqg
