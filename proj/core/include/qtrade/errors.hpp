#pragma once

#include <stdexcept>
#include <string>

namespace qtrade {

/// Base class for all qtrade errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (bad CSV row, unparsable timestamp, ...).
class ParseError : public Error {
public:
    using Error::Error;
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

/// Input violates a temporal ordering requirement.
class OrderingError : public ParseError {
public:
    using ParseError::ParseError;
};

/// A value or parameter outside its legal domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Not enough history to compute the requested quantity.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// API misuse (e.g. backward() without a prior forward pass).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures, always carrying the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace qtrade
