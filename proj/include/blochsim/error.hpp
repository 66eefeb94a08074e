#pragma once

#include <stdexcept>
#include <string>

namespace blochsim {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside the domain of the operation (nonpositive mass, zero force, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Containers or grids of incompatible shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// The adaptive ODE integrator could not meet its tolerance.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// A root or extremum could not be bracketed.
class SearchError : public Error {
 public:
  using Error::Error;
};

/// Non-finite amplitudes appeared during time stepping.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double at_time) : Error(what), time_(at_time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// A trajectory does not support the requested analysis (too few extrema, ...).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

/// Localized basis is not orthonormal enough for projection.
class BasisError : public Error {
 public:
  using Error::Error;
};

/// Continuum solver invariant violated (norm drift).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Two time series cannot be aligned sample by sample.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration; `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace blochsim
