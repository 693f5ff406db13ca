#pragma once

#include <stdexcept>
#include <string>

namespace hypolab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameter or configuration value (unknown tag, out-of-range size).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The truncation domain does not confine the potential.
class DomainTooSmallError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// An operation was called on an input that violates its precondition
/// (e.g. a state that is not mean-zero).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Floating-point or solver failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

class WeightOverflowError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateGapError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StructureError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateTraceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InsufficientSignalError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A Langevin trajectory produced a non-finite force.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, int coordinate)
        : NumericalError(what), coordinate_(coordinate) {}
    int coordinate() const noexcept { return coordinate_; }

private:
    int coordinate_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace hypolab
