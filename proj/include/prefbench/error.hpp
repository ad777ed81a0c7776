#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prefbench {

// Failure classes map onto CLI exit codes.
enum class ErrorClass {
    config,
    data,
    backend,
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}

    ErrorClass error_class() const noexcept { return class_; }

private:
    ErrorClass class_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorClass::config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorClass::data, what) {}
};

class BackendError : public Error {
public:
    explicit BackendError(const std::string& what) : Error(ErrorClass::backend, what) {}
};

// Syntax error in a tool-call expression. position is a byte offset into the input.
class ParseError : public DataError {
public:
    ParseError(std::size_t position, const std::string& message)
        : DataError("parse error at " + std::to_string(position) + ": " + message),
          position_(position),
          message_(message) {}

    std::size_t position() const noexcept { return position_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t position_;
    std::string message_;
};

}  // namespace prefbench
