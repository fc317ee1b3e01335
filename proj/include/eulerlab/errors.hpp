#pragma once

#include <stdexcept>
#include <string>

namespace eulerlab {

/// Bad experiment or sampling configuration (resolution too small, grid too
/// tight, unknown scenario, malformed config file).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Caller violated an argument contract (length mismatch, p <= 1, ...).
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Operation is only implemented for a subset of dimensions.
struct UnsupportedDimension : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Target lies outside the region where an estimate is stated.
struct PreconditionViolation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A particle carrying vorticity sits on the plane z = 0.
struct SymmetryViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite state produced by time integration.
struct NumericalAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace eulerlab
