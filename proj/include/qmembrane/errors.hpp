#pragma once

#include <stdexcept>
#include <string>

namespace qmem {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Coefficient matrix violates positivity, det = 1, or ellipticity.
class InvalidFieldError : public Error {
public:
  using Error::Error;
};

/// Dilatation with |mu| >= 1 somewhere.
class InvalidDilatationError : public Error {
public:
  using Error::Error;
};

/// Iteration failed to reach the requested tolerance.
class NonConvergenceError : public Error {
public:
  NonConvergenceError(const std::string& what, double last_update)
      : Error(what), last_update_(last_update) {}
  double last_update() const { return last_update_; }

private:
  double last_update_;
};

/// Point lies outside the computational window.
class OutOfWindowError : public Error {
public:
  using Error::Error;
};

/// Newton inversion of the planar map failed.
class InversionError : public Error {
public:
  InversionError(const std::string& what, double worst_residual)
      : Error(what), worst_residual_(worst_residual) {}
  double worst_residual() const { return worst_residual_; }

private:
  double worst_residual_;
};

/// Invalid polygon, empty point set, or insufficient sampling resolution.
class GeometryError : public Error {
public:
  using Error::Error;
};

/// Requested discretization exceeds the memory cap.
class ResourceError : public Error {
public:
  using Error::Error;
};

/// Linear or eigenvalue solver breakdown.
class SolverError : public Error {
public:
  using Error::Error;
};

/// Bad run configuration (unknown preset, invalid tolerance, ...).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Scalar argument outside the formula's domain (K < 1, R <= 0, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

}  // namespace qmem
