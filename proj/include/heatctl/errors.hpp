#pragma once

#include <stdexcept>
#include <string>

namespace heatctl {

/// Configuration document is malformed or out of documented ranges.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Quadrature grid cannot resolve the requested modes without aliasing,
/// or the requested basis size exceeds the enumerable lattice window.
class ResolutionError : public std::runtime_error {
public:
  explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

/// A stabilizer configuration was rejected (rank deficiency, degenerate
/// spectrum, ill-conditioned matrix sum, bad parameters).
class DesignRejected : public std::runtime_error {
public:
  explicit DesignRejected(const std::string& what) : std::runtime_error(what) {}
};

/// A simulated state exceeded the overflow guard or became non-finite.
class BlowUpError : public std::runtime_error {
public:
  BlowUpError(double t, const std::string& what)
      : std::runtime_error(what), time(t) {}
  double time;
};

} // namespace heatctl
