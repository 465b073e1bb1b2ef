#pragma once

#include <stdexcept>
#include <string>

namespace hedgemax {

// bad user input: inconsistent dimensions, out-of-range accuracy targets,
// unreadable files. Maps to process exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// an oracle or data source broke its stated interface: risks outside the
// declared range, misshapen vectors, negative slack. Exit code 3.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& what) : std::runtime_error(what) {}
};

// the arithmetic itself gave up: failed bracketing, singular systems,
// non-finite intermediates. Exit code 4.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hedgemax
