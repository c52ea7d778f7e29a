#pragma once

#include <stdexcept>
#include <string>

namespace t2net {

/// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid value in user-supplied data (bad class code, non-finite field, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Metrics requested over zero labeled cells.
class EmptyReportError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Grid too small for a stencil, or inconsistent geometry metadata.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Tensor shapes that do not line up.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Hyperparameter or configuration value out of range.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// API misuse (wrong cube kind, non one-hot label, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Missing or malformed files on disk.
class InputError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf appeared during computation.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace t2net
