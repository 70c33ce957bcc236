#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dnls {

/// Bad or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values, blow-up, or solver breakdown (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, std::int64_t step = -1)
      : std::runtime_error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what),
        step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

/// Sampler diagnostics below the acceptable level: poor mixing, low ESS (exit code 4).
class DiagnosticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dnls
