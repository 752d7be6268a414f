#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace geomphase {

using Complex    = std::complex<double>;
using Matrix     = Eigen::MatrixXcd;
using Vector     = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr const char* kVersion = "0.1.0";

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration input (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Numeric or convergence failure: degeneracies, overflow, integrator
/// faults (CLI exit code 3).
struct NumericError : Error {
    using Error::Error;
};

/// A documented precondition was violated by the caller (CLI exit code 4).
struct PreconditionError : Error {
    using Error::Error;
};

/// Level crossing or near-crossing detected; names the colliding levels
/// (1-based, as in the physics convention).
struct DegeneracyError : NumericError {
    DegeneracyError(int a, int b, double gap)
        : NumericError("degenerate levels " + std::to_string(a) + " and " +
                       std::to_string(b) + " (gap " + std::to_string(gap) + ")"),
          level_a(a), level_b(b) {}
    int level_a;
    int level_b;
};

inline int parity_sign(int k) { return (k % 2 == 0) ? 1 : -1; }

}  // namespace geomphase
