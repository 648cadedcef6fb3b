#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace poisonlab {

inline constexpr const char* kToolName = "poisonlab";
inline constexpr const char* kToolVersion = "0.1.0";

// Malformed user-facing configuration (bad JSON, unknown keys, out-of-range
// fields). The CLI maps this to exit code 2.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A stated precondition of an operation was violated at runtime (degenerate
// covariance where full rank is required, zero trigger, off-support query...).
// The CLI maps this to exit code 3.
struct precondition_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Standard normal CDF via erfc; accurate in both tails.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(Z >= z) for standard normal Z.
inline double normal_survival(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace poisonlab
