#pragma once

#include <stdexcept>
#include <string>

namespace smtabc {

// Common base for all toolkit errors so callers can catch one type at the
// CLI boundary.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid numeric input to a law evaluator or allocator (nonpositive N, D,
// out-of-range k, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Bad configuration value (vocab size below alphabet, nonpositive delta, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace smtabc
