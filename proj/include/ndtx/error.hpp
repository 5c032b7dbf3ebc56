#pragma once

#include <stdexcept>
#include <string>

namespace ndtx {

// Error categories line up with the C API status codes and CLI exit codes.
enum class ErrorKind {
    config = 2,
    data = 3,
    numeric = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

// Raised when an input is structurally valid but carries no information for the
// requested operation: a single-leaf tree, or a paired sample with no nonzero
// differences.
class DegenerateError : public DataError {
public:
    explicit DegenerateError(const std::string& what) : DataError(what) {}
};

}  // namespace ndtx
