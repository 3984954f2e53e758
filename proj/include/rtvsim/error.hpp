#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rtvsim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchedulingInPast : public Error {
public:
    using Error::Error;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

/// Invalid scenario or profile. `field()` is the dotted path of the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class NonMonotonicTime : public ParseError {
public:
    using ParseError::ParseError;
};

/// A model invariant was violated. Always a simulator bug.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

class FingerprintMismatch : public Error {
public:
    using Error::Error;
};

} // namespace rtvsim
