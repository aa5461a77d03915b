#pragma once

#include "npgmo/problem.hpp"
#include "npgmo/subproblem.hpp"
#include "npgmo/types.hpp"

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace npgmo {

struct NewtonVariant {};
/// First-order baseline: every Hessian is replaced by ell * I.
struct ProxGradientVariant {
    double ell = 1.0;
};

struct SolverConfig {
    double eps = 1e-8;      // stop when |d| < eps
    double sigma = 0.1;
    double gamma = 0.5;
    std::size_t max_outer = 1000;
    double tol_gap = 1e-10;
    std::size_t max_dual_iters = 500;
    std::size_t max_inner_iters = 10000;
    std::size_t max_halvings = 60;
    std::variant<NewtonVariant, ProxGradientVariant> variant = NewtonVariant{};

    /// Throws ConfigError naming the offending field ("solver.sigma", ...).
    void validate() const;
    bool is_pgmo() const noexcept { return std::holds_alternative<ProxGradientVariant>(variant); }
    DirectionOptions direction_options() const;
};

enum class TerminalStatus { CriticalReached, MaxIters, SubproblemFailure };

std::string to_string(TerminalStatus s);

struct IterationRecord {
    std::size_t k = 0;
    Vector x;
    Vector f;            // F(x^k)
    double dnorm = 0.0;
    double theta = 0.0;
    double t = 0.0;      // accepted step; 0 on the terminal row
    Vector lambda;
    double gap = 0.0;
};

struct SolveTrace {
    std::vector<IterationRecord> records;
    TerminalStatus status = TerminalStatus::MaxIters;
    std::string message;

    /// Number of accepted steps.
    std::size_t steps() const noexcept { return records.empty() ? 0 : records.size() - 1; }
    const Vector& final_x() const { return records.back().x; }
};

/// Rounding allowance added to the right-hand side of the sufficient-decrease
/// test: a few ulps of the compared function values.
double decrease_allowance(double f_old, double f_new) noexcept;

/// True when F_i(x_new) - F_i(x_old) <= t*sigma*theta (+ allowance) for every i.
bool sufficient_decrease(const Vector& f_old, const Vector& f_new, double t, double sigma,
                         double theta);

/// Largest t = gamma^j, j = 0..max_halvings, passing the sufficient-decrease test.
double armijo_backtrack(const ProblemInstance& problem, const Vector& x, const Vector& d,
                        double theta, double sigma, double gamma, std::size_t max_halvings = 60);

/// Newton-type proximal gradient method.
SolveTrace npgmo_solve(const ProblemInstance& problem, const SolverConfig& config, const Vector& x0);

/// Proximal gradient baseline; config.variant must be ProxGradientVariant.
SolveTrace pgmo_solve(const ProblemInstance& problem, const SolverConfig& config, const Vector& x0);

/// Dispatches on config.variant.
SolveTrace solve(const ProblemInstance& problem, const SolverConfig& config, const Vector& x0);

/// Smooth evaluation with Hessians substituted according to the variant.
SmoothEval direction_model(const ProblemInstance& problem, const SolverConfig& config, const Vector& x);

}  // namespace npgmo
