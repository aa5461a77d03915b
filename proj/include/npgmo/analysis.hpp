#pragma once

// Empirical checks of the convergence behaviour recorded in solve traces.

#include "npgmo/driver.hpp"
#include "npgmo/problem.hpp"
#include "npgmo/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace npgmo {

/// Outcome of one named check. `margin` is positive when the check passes
/// with room to spare and negative by the amount it fails.
struct CheckVerdict {
    std::string name;
    bool passed = false;
    double margin = 0.0;
    std::string detail;
};

/// |d(x)| from a fresh Newton-model direction solve at tolerance tol_gap.
double criticality_measure(const ProblemInstance& problem, const Vector& x, double tol_gap = 1e-12);

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

struct OrderFit {
    double q = 0.0;
    double c = 0.0;
    std::size_t points = 0;   // errors used (pairs = points - 1)
};

/// Indices of the fit tail: the last max(4, 40%) points of the trailing
/// strictly decreasing run of errors above `noise_floor`.
std::vector<std::size_t> fit_tail(std::span<const double> errors, double noise_floor);

/// Least-squares fit of log e_{k+1} = log C + q log e_k over fit_tail(errors).
OrderFit estimate_order(std::span<const double> errors, double noise_floor = 0.0);

struct TauBracket {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double tau) const noexcept { return tau >= lo && tau <= hi; }
};

/// [(mu - r)/(mu - eps), (mu + r)/(mu - eps)], r = sqrt(2 mu eps - eps^2);
/// eps must lie in (0, (1 - sigma) mu].
TauBracket tau_bracket(double eps, double mu, double sigma);

/// High-accuracy limit point: continues NPGMO from `start` until |d| <= 1e-12.
Vector reference_solution(const ProblemInstance& problem, const SolverConfig& config, const Vector& start);

inline constexpr double kReferenceEps = 1e-12;

/// e_k = |x^k - x*| for every record.
std::vector<double> error_sequence(const SolveTrace& trace, const Vector& x_star);

/// Noise floor below which errors are excluded from rate fits.
double rate_noise_floor(const Vector& x_star) noexcept;

struct TauEpsReport {
    double eps = 0.0;
    TauBracket bracket;
    /// First k after which every measurable tau lies in the bracket.
    std::optional<std::size_t> first_k_inside;
};

struct TauReport {
    std::vector<double> tau;          // tau_k for measurable k (index = k)
    std::vector<TauEpsReport> per_eps;
    std::optional<double> final_tau;
    double orders_spanned = 0.0;      // log10(e_0 / e_last measurable)
    bool applicable = false;          // trace has a unit-step tail
    std::vector<CheckVerdict> verdicts;
};

TauReport tau_check(const SolveTrace& trace, const Vector& x_star, double mu, double sigma,
                    std::span<const double> eps_list);

/// Aggregate rate diagnostics for one run.
struct RateReport {
    std::vector<double> errors;
    OrderFit order;
    std::vector<double> tail_ratios;        // e_{k+1}/e_k over the fit tail
    std::vector<double> tail_quadratic;     // e_{k+1}/e_k^2 over the fit tail
    TauReport tau;
    std::vector<CheckVerdict> verdicts;
};

RateReport analyze_rates(const SolveTrace& trace, const ProblemInstance& problem, const Vector& x_star,
                         double sigma);

/// theta^k <= -(mu/2)|d^k|^2 + tol on every record carrying a direction.
CheckVerdict check_descent_bound(const SolveTrace& trace, double mu, double tol = 1e-8);

/// Re-verifies the sufficient-decrease test from the recorded values.
CheckVerdict check_sufficient_decrease(const SolveTrace& trace, double sigma);

/// F_i(x^k) nonincreasing for every objective.
CheckVerdict check_monotone_values(const SolveTrace& trace);

/// Every step after the first `skip_fraction` of steps has t = 1.
CheckVerdict check_unit_step_tail(const SolveTrace& trace, double skip_fraction = 0.2);

/// For each x0: t_0 = 1 and criticality at x^1 <= 10 sqrt(tol_gap).
CheckVerdict check_quadratic_termination(const ProblemInstance& problem, const SolverConfig& config,
                                         std::span<const Vector> x0_batch);

/// At every unit-step iteration and probe p:
/// F_lambda(x^{k+1}) - F_lambda(p) <= -1/2 |x^{k+1} - p|^2_{A_lambda} + tol.
CheckVerdict check_fundamental_inequality_quadratic(const SolveTrace& trace, const ProblemInstance& problem,
                                                    std::span<const Vector> probes, double tol = 1e-8);

/// Random probes around each iterate (seeded).
std::vector<Vector> random_probes(const SolveTrace& trace, std::size_t per_iteration, std::uint64_t seed);

}  // namespace npgmo
