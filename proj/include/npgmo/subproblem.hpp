#pragma once

// Newton-type proximal direction subproblem
//
//   theta(x) = min_d max_i psi_i(d),
//   psi_i(d) = <grad f_i(x), d> + g(x+d) - g(x) + 1/2 d' hess f_i(x) d,
//
// solved through its concave dual over the unit simplex:
//   phi(lambda) = min_d sum_i lambda_i psi_i(d).
// The inner minimization has a unique solution d(lambda) whenever the weighted
// Hessian is positive definite, so phi is differentiable with gradient psi(d(lambda)).

#include "npgmo/problem.hpp"
#include "npgmo/types.hpp"

#include <cstddef>
#include <optional>

namespace npgmo {

/// A point of the unit simplex {lambda >= 0, sum lambda = 1}.
class SimplexWeights {
public:
    /// Uniform weights 1/m.
    static SimplexWeights uniform(std::size_t m);
    /// Wraps weights already known to be feasible (checked to 1e-12).
    static SimplexWeights from_feasible(Vector lambda);

    const Vector& values() const noexcept { return lambda_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(lambda_.size()); }
    double operator[](std::size_t i) const { return lambda_[static_cast<Eigen::Index>(i)]; }

private:
    friend SimplexWeights project_simplex(const Vector& v);
    explicit SimplexWeights(Vector lambda) : lambda_(std::move(lambda)) {}
    Vector lambda_;
};

/// Euclidean projection onto the unit simplex (sort-and-threshold), renormalized.
SimplexWeights project_simplex(const Vector& v);

struct InnerOptions {
    double tol = 1e-11;           // fixed-point residual |d - T(d)|
    std::size_t max_iters = 10000;
};

struct InnerResult {
    Vector d;
    double residual = 0.0;        // fixed-point residual at d (0 for the exact solve)
    std::size_t iterations = 0;
};

/// d(lambda) = argmin_d <grad f_lambda, d> + g(x+d) - g(x) + 1/2 d' H_lambda d.
InnerResult inner_minimize(const SimplexWeights& lambda, const SmoothEval& eval,
                           const NonsmoothTerm& nonsmooth, const Vector& x,
                           const InnerOptions& options = {},
                           const Vector* warm_start = nullptr);

/// Same, with the weighted gradient and Hessian supplied directly.
InnerResult inner_minimize_weighted(const Matrix& hessian, const Vector& gradient,
                                    const NonsmoothTerm& nonsmooth, const Vector& x,
                                    const InnerOptions& options = {},
                                    const Vector* warm_start = nullptr);

/// psi_i(d) for every objective.
Vector model_values(const Vector& d, const SmoothEval& eval, const NonsmoothTerm& nonsmooth,
                    const Vector& x);

/// max_i psi_i - sum_i lambda_i psi_i; nonnegative for feasible lambda.
double duality_gap(const SimplexWeights& lambda, const Vector& model_vals);

struct DirectionOptions {
    double tol_gap = 1e-10;
    std::size_t max_dual_iters = 500;
    std::size_t max_inner_iters = 10000;
    /// Inner fixed-point tolerance; negative means tol_gap / 10, divided by the
    /// spread of the gradients when that exceeds 1.
    double inner_tol = -1.0;
    /// Directions at least this long are refined until theta <= phi / 2 < 0.
    double descent_norm = kInf;
};

struct DirectionResult {
    Vector d;
    double theta = 0.0;           // max_i psi_i(d)
    SimplexWeights lambda = SimplexWeights::uniform(1);
    double gap = 0.0;
    double gap_target = 0.0;      // tol_gap raised to the resolvable floor (model rounding, weight resolution)
    double dual_value = 0.0;      // phi(lambda)
    Vector model_values;
    std::size_t inner_iters = 0;
    std::size_t dual_iters = 0;
};

/// Dual ascent cap reached with gap above target; carries the best iterate.
class DirectionNonconvergence : public NonconvergenceError {
public:
    explicit DirectionNonconvergence(DirectionResult best)
        : NonconvergenceError("direction subproblem: duality gap above tolerance", best.gap),
          best_(std::move(best)) {}
    const DirectionResult& best() const noexcept { return best_; }

private:
    DirectionResult best_;
};

/// Projected-gradient ascent on phi from uniform weights until the duality gap
/// meets its target.
DirectionResult solve_direction(const SmoothEval& eval, const NonsmoothTerm& nonsmooth,
                                const Vector& x, const DirectionOptions& options = {});

DirectionResult solve_direction(const ProblemInstance& problem, const Vector& x,
                                const DirectionOptions& options = {});

/// Rounding floor used for a model-value scale: gaps below it are not resolvable.
double gap_rounding_floor(double model_scale) noexcept;

}  // namespace npgmo
