#pragma once

// Reference computations for tests. None of these call into the solver's
// subproblem code; they use brute force or textbook closed forms.

#include "npgmo/problem.hpp"

#include <cstdint>
#include <vector>

namespace npgmo::testing {

/// max_i psi_i(d) computed directly from the oracles (no kernels).
double model_max(const SmoothEval& eval, const NonsmoothTerm& g, const Vector& x, const Vector& d);

/// min_d max_i psi_i(d) for n <= 2 by grid search on a box that provably
/// contains every d with negative model value, refined three times around
/// the best cell.
struct GridResult {
    double theta = 0.0;
    Vector d;
};
GridResult grid_theta(const SmoothEval& eval, const NonsmoothTerm& g, const Vector& x, double mu,
                      int points = 401);

/// Euclidean projection onto the simplex by enumerating supports and solving
/// each equality-constrained problem in closed form.
Vector simplex_projection_by_supports(const Vector& v);

/// Minimizer of sum_i w_i f_i + g for quadratic f_i by cyclic coordinate
/// descent with exact coordinate steps (soft threshold / clip per coordinate).
Vector weighted_sum_minimizer(const ProblemInstance& quadratic, const Vector& weights,
                              std::size_t sweeps = 20000, double tol = 1e-15);

/// Central differences.
Vector fd_gradient(const SmoothObjective& f, const Vector& x, double h = 1e-6);
Matrix fd_hessian(const SmoothObjective& f, const Vector& x, double h = 1e-5);

/// Relative error |a - b| / max(1, |b|) in the max norm.
double rel_err(const Matrix& a, const Matrix& b);

/// Random simplex point with a few exact zeros when `sparse`.
Vector random_simplex(std::uint64_t seed, Eigen::Index m, bool sparse = false);

}  // namespace npgmo::testing
