#pragma once

#include <stdexcept>
#include <string>

namespace nudgerom {

/// Bad or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Mismatched grids / array shapes between operands.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside its valid range (e.g. truncation rank, query time).
struct RangeError : std::runtime_error {
  explicit RangeError(const std::string& what) : std::runtime_error(what) {}
};

/// Runtime numerical failure: blow-up, stagnating nonlinear solve,
/// ill-conditioned eigenproblem (CLI exit code 3).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nudgerom
