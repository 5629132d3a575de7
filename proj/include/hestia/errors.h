#pragma once

#include <stdexcept>
#include <string>

namespace hestia {

// Bad input: malformed files, invalid configuration, violated preconditions.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failure while computing: solver non-convergence, NaN loss, I/O failure.
// The CLI maps this to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hestia
