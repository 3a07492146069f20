#pragma once

#include <stdexcept>
#include <string>

namespace onebit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A message symbol or class index outside its alphabet.
class InvalidMessage : public Error {
public:
    using Error::Error;
};

/// Dimension or precondition mismatch between arguments.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A detector could not be fitted from the given training data.
class FitError : public Error {
public:
    using Error::Error;
};

/// Invalid experiment configuration. `field()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// File could not be read or written; the message carries the path.
class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const char* what) {
    if (!condition) throw ContractViolation(what);
}

}  // namespace detail
}  // namespace onebit
