#pragma once

#include <stdexcept>
#include <string>

namespace maxsmooth {

// Exit codes used by the command-line tool. Library code throws; the CLI maps.
enum class ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kDataError = 3,
  kNumericalFailure = 4,
};

/// Malformed or out-of-range input to a library call.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a link or transform.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file or record that fails validation. Carries the offending line when known.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  [[nodiscard]] long line() const { return line_; }

 private:
  long line_;
};

/// Factorization failure, non-convergence that cannot be flagged, and similar.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace maxsmooth
