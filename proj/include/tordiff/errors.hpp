#ifndef TORDIFF_ERRORS_HPP_
#define TORDIFF_ERRORS_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace tordiff {

/// Bad input value: non-finite angle, wrong dimension, non-SPD covariance.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameter combination outside the admissible set (e.g. alpha3^2 >= alpha1*alpha2).
class ConstraintViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Solver or experiment configuration that cannot be run as given.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::optional<long> suggested_steps = std::nullopt)
      : std::runtime_error(what), suggested_steps_(suggested_steps) {}

  /// For time-step violations, the smallest steps-per-unit-time that passes the check.
  std::optional<long> suggested_steps() const noexcept { return suggested_steps_; }

 private:
  std::optional<long> suggested_steps_;
};

/// A density, likelihood or decomposition produced a non-finite or degenerate value.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(what), index_(index) {}

  /// Offending transition (inference) or aligned site (evo-hmm), when known.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  std::optional<std::size_t> index_;
};

class FitFailed : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Moment-based starting values cannot be formed (e.g. uniform data).
class InitDegenerate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tordiff

#endif  // TORDIFF_ERRORS_HPP_
