#pragma once

#include <stdexcept>
#include <string>

namespace mmn {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid numeric input: violated preconditions, non-positive volatility, etc.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed input file content. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    /// Re-raises `inner` with a location prefix (typically the file path).
    ParseError(const std::string& prefix, const ParseError& inner)
        : Error(prefix + ": " + inner.what()), line_(inner.line_) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Invalid or incomplete run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DuplicateKeyError : public Error {
public:
    using Error::Error;
};

/// Dates not strictly increasing.
class OrderingError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// An iterative fit ran out of budget. Routines that can report their best
/// iterate throw a subclass carrying it.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace mmn
