#pragma once

#include <stdexcept>
#include <string>

namespace wkam {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Query outside the domain where a quantity is defined (sample window, grid size, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An iterative method stopped without meeting its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Operation precondition violated by the supplied data.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or input file.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace wkam
