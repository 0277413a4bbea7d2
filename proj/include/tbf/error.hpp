#pragma once

#include <stdexcept>
#include <string>

namespace tbf {

/// Malformed or inconsistent input: config files, parameter values, CLI overrides.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a result that violates a physical or numerical invariant.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace tbf
