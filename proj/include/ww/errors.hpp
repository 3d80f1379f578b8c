#pragma once

#include <stdexcept>
#include <string>

namespace ww {

// Base class for all errors raised by the library. The CLI maps subclasses
// to distinct exit codes.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible grids or malformed grid parameters.
class GridError : public Error {
  public:
    using Error::Error;
};

// A spectral multiplier evaluated to a non-finite value.
class InvalidMultiplierError : public Error {
  public:
    using Error::Error;
};

// A symbol table is missing a requested frequency column.
class SymbolDomainError : public Error {
  public:
    using Error::Error;
};

// No admissible smoothing parameter for the flattening map.
class SurfaceTooRoughError : public Error {
  public:
    using Error::Error;
};

// The strip discretization could not be solved to tolerance.
class IllConditionedError : public Error {
  public:
    IllConditionedError(const std::string& what, double condition_estimate)
        : Error(what), condition_estimate(condition_estimate) {}
    double condition_estimate = 0.0;
};

// Ellipticity failure when building the decoupling symbols.
class DegenerateSymbolError : public Error {
  public:
    using Error::Error;
};

// Taylor-sign violation: the symmetrizer square roots are undefined.
class SymmetrizerUndefinedError : public Error {
  public:
    SymmetrizerUndefinedError(const std::string& what, double min_a, std::size_t node)
        : Error(what), min_a(min_a), node(node) {}
    double min_a = 0.0;
    std::size_t node = 0;
};

// Non-finite values appeared during time integration.
class BlowUpError : public Error {
  public:
    BlowUpError(const std::string& what, double time) : Error(what), time(time) {}
    double time = 0.0;
};

// Configuration parse or validation failure.
class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& what, int line = 0) : Error(what), line(line) {}
    int line = 0;
};

// Monitor samples arrived out of time order.
class TimeOrderError : public Error {
  public:
    using Error::Error;
};

// File output failure.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace ww
