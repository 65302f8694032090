#pragma once

#include <stdexcept>
#include <string>

namespace otdet {

/// Failure categories. Each maps onto one CLI exit code.
enum class ErrorKind {
    dimension,    // mismatched matrix/vector shapes
    validation,   // malformed value (NaN, non-PSD, off-simplex, ...)
    convergence,  // iterative method did not converge
    numerical,    // singular system, solver breakdown
    config,       // bad user configuration
    io,           // file read/write or parse failure
    internal,     // broken invariant that should be impossible
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& w) : Error(ErrorKind::dimension, w) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& w) : Error(ErrorKind::validation, w) {}
};
struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& w) : Error(ErrorKind::convergence, w) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(ErrorKind::numerical, w) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};
struct InternalError : Error {
    explicit InternalError(const std::string& w) : Error(ErrorKind::internal, w) {}
};

/// 0 success, 2 config, 3 numerical/solver, 4 I/O.
inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::dimension:
        case ErrorKind::validation:
        case ErrorKind::config: return 2;
        case ErrorKind::convergence:
        case ErrorKind::numerical:
        case ErrorKind::internal: return 3;
        case ErrorKind::io: return 4;
    }
    return 3;
}

}  // namespace otdet
