#pragma once

#include <stdexcept>
#include <string>

namespace difflab {

// Tensor shapes or dimensions do not line up.
struct DimError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A configuration value is invalid; raised before any heavy compute starts.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A computation degenerated numerically: NaN loss, diverging chain,
// vanishing denominator. `step` carries the loop index when one exists.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg, long long step = -1)
      : std::runtime_error(msg), step(step) {}
  long long step;
};

}  // namespace difflab
