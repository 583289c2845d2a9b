#pragma once

#include <stdexcept>
#include <string>

namespace rolling {

/// Invalid user-supplied configuration (bad hyperparameter, bad schema, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-finite values, failed decompositions.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File I/O failure.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Mismatched tensor dimensions between caller and callee.
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace rolling
