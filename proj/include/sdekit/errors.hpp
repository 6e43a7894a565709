#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdekit {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// State/matrix dimensions do not match what an operation requires.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A simulated path left the representable range (non-finite state).
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t step, std::size_t path = 0)
        : Error(what), step(step), path(path) {}
    std::size_t step;
    std::size_t path;
};

/// Not enough rows/paths to form the requested regression targets.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A dictionary column is (numerically) constant and cannot be standardized.
class DegenerateColumnError : public Error {
public:
    DegenerateColumnError(const std::string& what, int column)
        : Error(what), column(column) {}
    int column;
};

/// A linear-algebra step failed (non-finite values, factorization breakdown).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Model discovery could not produce a usable equation (e.g. all-negative
/// fitted variance for a diffusion term).
class DiscoveryError : public Error {
public:
    using Error::Error;
};

/// File or stream content does not match the expected format.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace sdekit
