#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace npgmo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

// Error hierarchy. Every failure the library reports is one of these.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed an argument outside an operation's domain.
class InputError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration; carries the offending field path (e.g. "solver.sigma").
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// An objective oracle returned non-finite output.
class EvaluationError : public Error {
public:
    EvaluationError(std::size_t objective, const std::string& what)
        : Error("objective " + std::to_string(objective) + ": " + what), objective_(objective) {}
    std::size_t objective() const noexcept { return objective_; }

private:
    std::size_t objective_;
};

/// Weighted Hessian is not positive definite.
class SingularMetricError : public Error {
public:
    using Error::Error;
};

/// An iterative solver hit its cap before meeting its tolerance.
class NonconvergenceError : public Error {
public:
    NonconvergenceError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// No backtracking step satisfied the sufficient-decrease test.
class LineSearchError : public Error {
public:
    using Error::Error;
};

}  // namespace npgmo
