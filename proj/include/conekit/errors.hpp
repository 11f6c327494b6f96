#pragma once

#include <stdexcept>
#include <string>

namespace conekit {

// Bad or unsupported configuration (unknown algebra, invalid parameters).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an operation's contract (algebra mismatch, empty sample).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Argument outside the domain of a function (spectrum, parameter threshold).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Floating point breakdown during a simulation (loss of cone membership).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace conekit
