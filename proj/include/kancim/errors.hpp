#ifndef KANCIM_ERRORS_HPP_
#define KANCIM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace kancim {

// Bad or inconsistent user input: config files, CLI flags, file schemas.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested configuration cannot meet its constraints (e.g. no grid fits
// the budget). Distinct from ConfigError so callers can report it separately.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure at runtime: divergence, failed calibration, singular system.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// A DAC level whose target current the transfer function cannot reach
// within the voltage headroom.
class CalibrationError : public InfeasibleError {
 public:
  explicit CalibrationError(const std::string& msg) : InfeasibleError(msg) {}
};

}  // namespace kancim

#endif
