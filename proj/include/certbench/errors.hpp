#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace certbench {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingParameter : public Error {
public:
    explicit MissingParameter(std::string name)
        : Error("missing parameter '" + name + "'"), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class ExpressionSyntaxError : public Error {
public:
    ExpressionSyntaxError(const std::string& text, std::size_t position, const std::string& what)
        : Error("cannot parse expression '" + text + "' at offset " + std::to_string(position) + ": " + what) {}
};

class ValuationOutOfRegion : public Error {
public:
    using Error::Error;
};

class UnknownLabel : public Error {
public:
    explicit UnknownLabel(const std::string& label) : Error("unknown label '" + label + "'") {}
};

class NonConvergence : public Error {
public:
    explicit NonConvergence(std::uint64_t iterations)
        : Error("value iteration did not converge within " + std::to_string(iterations) + " iterations"),
          iterations_(iterations) {}
    NonConvergence(std::uint64_t iterations, const std::string& what) : Error(what), iterations_(iterations) {}
    std::uint64_t iterations() const noexcept { return iterations_; }

private:
    std::uint64_t iterations_;
};

class PolicyIncomplete : public Error {
public:
    using Error::Error;
};

class InvalidScenario : public Error {
public:
    explicit InvalidScenario(const std::string& reason) : Error("invalid scenario: " + reason) {}
};

class InvalidModel : public Error {
public:
    using Error::Error;
};

class InvalidSweep : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class MalformedCsv : public Error {
public:
    MalformedCsv(std::size_t line, const std::string& what)
        : Error("malformed CSV at line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class UnknownPair : public Error {
public:
    explicit UnknownPair(const std::string& id) : Error("unknown use/context pair '" + id + "'") {}
};

class NoFeasibleBound : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Config file could not be parsed; carries the line or field that failed.
class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Config parsed but violates a cross-reference or range constraint.
class ValidationError : public ConfigError {
public:
    ValidationError(std::string field, const std::string& reason)
        : ConfigError("invalid config field '" + field + "': " + reason), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace certbench
