#pragma once

#include <stdexcept>
#include <string>

namespace cavphase {

/// Base for every error raised by the library. The CLI maps subclasses onto
/// exit codes (ConfigError -> 2, everything numerical -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_error"; }
};

/// Iterative numerics that did not converge (quadrature, fits, root finding).
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical_error"; }
};

/// ODE integration failed; carries the time of the last good state.
class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, double last_good_time)
      : NumericalError(what), last_good_time_(last_good_time) {}
  const char* kind() const noexcept override { return "integration_error"; }
  double last_good_time() const noexcept { return last_good_time_; }

 private:
  double last_good_time_;
};

/// A conserved quantity (norm, unitarity) drifted beyond its bound.
class IntegrityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "integrity_error"; }
};

/// Pancharatnam phase requested between (numerically) orthogonal states.
class OrthogonalStatesError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "orthogonal_states"; }
};

/// Bad input data handed to a post-processing routine.
class InputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "input_error"; }
};

/// Configuration text could not be turned into a valid RunConfig.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

}  // namespace cavphase
