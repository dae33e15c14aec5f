#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vortexldp {

/// Base for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Failed property check (CLI exit code 3).
class AssertionFailure : public Error {
public:
    using Error::Error;
};

/// Numerical failure: non-convergence, blow-up, CFL violation (CLI exit code 4).
class NumericError : public Error {
public:
    NumericError(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Kernel evaluated at its singularity.
class SingularityError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Two particles closer than the direct-mode guard.
class CollisionError : public NumericError {
public:
    CollisionError(std::size_t i, std::size_t j, double r)
        : NumericError("near collision between particles " + std::to_string(i) + " and " +
                           std::to_string(j) + " (r=" + std::to_string(r) + ")",
                       r),
          i_(i), j_(j) {}
    std::size_t first() const { return i_; }
    std::size_t second() const { return j_; }

private:
    std::size_t i_, j_;
};

}  // namespace vortexldp
