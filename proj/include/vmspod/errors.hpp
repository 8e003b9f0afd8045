#pragma once

#include <stdexcept>
#include <string>

namespace vmspod {

/// Malformed or truncated binary artifact.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input artifact does not belong to the current discretization.
struct CompatibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Nonlinear or linear solve failed.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad user-facing configuration or parameters.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace vmspod
