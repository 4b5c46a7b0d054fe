#pragma once
#include <stdexcept>
#include <string>

namespace dpkz {

// Failures carry a short category string. The CLI maps categories to exit
// codes and prints them in a machine-readable error block, so downstream
// scripts can tell a config mistake from a quadrature failure.
struct Error : std::runtime_error {
  std::string category;
  Error(std::string cat, const std::string& msg)
      : std::runtime_error(msg), category(std::move(cat)) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

// quadrature, bracketing or statistics accuracy could not be reached
struct EstimationError : Error {
  explicit EstimationError(const std::string& m) : Error("estimation", m) {}
};

// exact-values region of a slab exhausted or accessed out of range
struct ConeError : Error {
  explicit ConeError(const std::string& m) : Error("cone", m) {}
};

// an averaging ball or a test-function support sticks out of computed data
struct CoverageError : Error {
  explicit CoverageError(const std::string& m) : Error("coverage", m) {}
};

// run refused up front because it cannot fit in the configured memory budget
struct BudgetError : Error {
  explicit BudgetError(const std::string& m) : Error("budget", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace dpkz
