#pragma once

#include <stdexcept>
#include <string>

namespace qkde {

/// Process exit codes used by the command line tool.
enum class ExitCode : int {
    ok = 0,
    config = 2,
    numerical = 3,
    io = 4,
};

/// Base of every error raised by the library. Carries the exit code the CLI maps it to.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, ExitCode code) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] ExitCode exit_code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Invalid or unknown configuration value.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, ExitCode::config) {}
};

/// API misuse: mismatched dimensions, unsupported method for a kernel family, etc.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(what, ExitCode::config) {}
};

/// Non-finite values, integrator step underflow, optimizer breakdown.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what, ExitCode::numerical) {}
};

/// Missing or malformed files.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what, ExitCode::io) {}
};

/// Well-formed input whose content violates a precondition (e.g. non-ascending x).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what, ExitCode::io) {}
};

}  // namespace qkde
