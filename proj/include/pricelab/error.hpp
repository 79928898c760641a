#pragma once

#include <stdexcept>
#include <string>

namespace pricelab {

// Process exit codes used by the command line tool.
enum class ExitCode : int { ok = 0, usage = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept = 0;
};

// Invalid option or option combination; raised before any computation.
class UsageError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

// Input data cannot support the requested computation.
class DataError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::data; }
};

// Missing mandatory column or malformed input configuration.
class ConfigError : public DataError {
public:
    using DataError::DataError;
};

// Empty matched set, broken chain, missing window link.
class UndefinedIndexError : public DataError {
public:
    using DataError::DataError;
};

// Solver failure: non-convergence, singular design.
class NumericalError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double residual)
        : NumericalError(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

} // namespace pricelab
