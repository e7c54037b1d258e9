#pragma once

#include <stdexcept>
#include <string>

namespace circneedlet {

// Every failure raised by the library derives from Error so callers can
// catch the whole family in one place (the CLI does this per grid cell).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of a function (e.g. w_s(x), x < 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Work or memory would exceed what the platform can hold.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Uniform quadrature grid too coarse for the needlet's frequency content.
class QuadratureResolutionError : public Error {
 public:
  using Error::Error;
};

// A truncated level range misses too much of the frame energy.
class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, double missing_fraction)
      : Error(what), missing_fraction_(missing_fraction) {}
  double missing_fraction() const noexcept { return missing_fraction_; }

 private:
  double missing_fraction_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InsufficientPilotError : public Error {
 public:
  using Error::Error;
};

class DegenerateSampleError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace circneedlet
