#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coneray {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid mesh sizes, malformed problem configs, rejected operator specs.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Caller broke a precondition (length mismatch, non-positive rho, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class UnboundVariable : public Error {
public:
    explicit UnboundVariable(const std::string& name)
        : Error("unbound variable '" + name + "'"), name_(name) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// Arithmetic that would leave the reals: log(x<=0), sqrt(x<0), x/0, overflow.
class DomainError : public Error {
public:
    using Error::Error;
};

class SingularOperator : public Error {
public:
    using Error::Error;
};

} // namespace coneray
