#pragma once

#include <stdexcept>
#include <string>

namespace cpl {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    Ok = 0,
    Usage = 1,
    Config = 2,
    Data = 3,
    Numeric = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::Usage; }
};

// Invalid sizes, unsupported combinations, malformed configuration.
class ConfigError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::Config; }
};

// Unreadable files, malformed CSV rows, empty datasets.
class DataError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::Data; }
};

// NaN/Inf values and gradients.
class NumericError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::Numeric; }
};

// Zero-norm vectors where a direction is needed, parallel plane generators.
class DegenerateError : public NumericError {
public:
    using NumericError::NumericError;
};

} // namespace cpl
