#include "npgmo/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace npgmo {
namespace {

constexpr double kDecreaseAllowanceUlps = 32.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void SolverConfig::validate() const {
    if (!(eps > 0.0)) throw ConfigError("solver.eps", "must be > 0");
    if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("solver.sigma", "must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("solver.gamma", "must lie in (0, 1)");
    if (!(tol_gap > 0.0)) throw ConfigError("solver.tol_gap", "must be > 0");
    if (max_dual_iters == 0) throw ConfigError("solver.max_dual_iters", "must be >= 1");
    if (max_inner_iters == 0) throw ConfigError("solver.max_inner_iters", "must be >= 1");
    if (const auto* pg = std::get_if<ProxGradientVariant>(&variant); pg && !(pg->ell > 0.0))
        throw ConfigError("solver.ell", "must be > 0 for the proximal gradient variant");
}

DirectionOptions SolverConfig::direction_options() const {
    DirectionOptions o;
    o.tol_gap = tol_gap;
    o.max_dual_iters = max_dual_iters;
    o.max_inner_iters = max_inner_iters;
    o.descent_norm = eps;
    return o;
}

std::string to_string(TerminalStatus s) {
    switch (s) {
        case TerminalStatus::CriticalReached: return "critical";
        case TerminalStatus::MaxIters: return "max_iters";
        case TerminalStatus::SubproblemFailure: return "failure";
    }
    return "unknown";
}

double decrease_allowance(double f_old, double f_new) noexcept {
    return kDecreaseAllowanceUlps * kMachineEps * std::max({1.0, std::abs(f_old), std::abs(f_new)});
}

bool sufficient_decrease(const Vector& f_old, const Vector& f_new, double t, double sigma,
                         double theta) {
    for (Eigen::Index i = 0; i < f_old.size(); ++i) {
        // +inf on either side fails: an infeasible trial point is never accepted.
        if (!std::isfinite(f_new[i]) || !std::isfinite(f_old[i])) return false;
        if (f_new[i] - f_old[i] > t * sigma * theta + decrease_allowance(f_old[i], f_new[i]))
            return false;
    }
    return true;
}

double armijo_backtrack(const ProblemInstance& problem, const Vector& x, const Vector& d,
                        double theta, double sigma, double gamma, std::size_t max_halvings) {
    if (d.size() != x.size() || d.lpNorm<Eigen::Infinity>() == 0.0)
        throw InputError("armijo_backtrack: direction must be nonzero");
    if (!(theta < 0.0)) throw InputError("armijo_backtrack: theta must be negative");
    const Vector f_old = eval_full(problem, x);
    double t = 1.0;
    for (std::size_t j = 0; j <= max_halvings; ++j, t *= gamma) {
        if (sufficient_decrease(f_old, eval_full(problem, x + t * d), t, sigma, theta)) return t;
    }
    throw LineSearchError("no step gamma^j, j <= " + std::to_string(max_halvings) +
                          ", satisfies the sufficient-decrease test");
}

SmoothEval direction_model(const ProblemInstance& problem, const SolverConfig& config,
                           const Vector& x) {
    SmoothEval eval = eval_smooth(problem, x);
    if (const auto* pg = std::get_if<ProxGradientVariant>(&config.variant)) {
        const Matrix scaled = pg->ell * Matrix::Identity(x.size(), x.size());
        for (auto& h : eval.hessians) h = scaled;
    }
    return eval;
}

SolveTrace solve(const ProblemInstance& problem, const SolverConfig& config, const Vector& x0) {
    config.validate();
    problem.validate();
    if (x0.size() != static_cast<Eigen::Index>(problem.n)) throw InputError("x0 has wrong dimension");
    if (!x0.allFinite()) throw InputError("x0 must be finite");

    const DirectionOptions dopts = config.direction_options();
    SolveTrace trace;
    Vector x = x0;
    Vector fx = eval_full(problem, x);

    for (std::size_t k = 0;; ++k) {
        IterationRecord rec;
        rec.k = k;
        rec.x = x;
        rec.f = fx;

        DirectionResult dir;
        try {
            dir = solve_direction(direction_model(problem, config, x), problem.shared_nonsmooth(), x, dopts);
        } catch (const DirectionNonconvergence& e) {
            rec.dnorm = e.best().d.norm();
            rec.theta = e.best().theta;
            rec.lambda = e.best().lambda.values();
            rec.gap = e.best().gap;
            trace.records.push_back(std::move(rec));
            trace.status = TerminalStatus::SubproblemFailure;
            trace.message = e.what();
            return trace;
        } catch (const Error& e) {
            rec.dnorm = rec.theta = rec.gap = kNaN;
            trace.records.push_back(std::move(rec));
            trace.status = TerminalStatus::SubproblemFailure;
            trace.message = e.what();
            return trace;
        }
        rec.dnorm = dir.d.norm();
        rec.theta = dir.theta;
        rec.lambda = dir.lambda.values();
        rec.gap = dir.gap;

        if (rec.dnorm < config.eps) {
            trace.records.push_back(std::move(rec));
            trace.status = TerminalStatus::CriticalReached;
            return trace;
        }
        if (k >= config.max_outer) {
            trace.records.push_back(std::move(rec));
            trace.status = TerminalStatus::MaxIters;
            return trace;
        }

        if (!(rec.theta < 0.0)) {
            // |d| >= eps but the model no longer certifies descent. The dual
            // value still bounds the exact direction: phi <= theta(x) <= -mu/2 |d(x)|^2.
            const double bound = std::sqrt(2.0 * std::max(0.0, -dir.dual_value) / problem.mu);
            if (bound < config.eps) {
                trace.records.push_back(std::move(rec));
                trace.status = TerminalStatus::CriticalReached;
                trace.message = "critical by dual bound |d(x)| <= " + std::to_string(bound);
                return trace;
            }
            trace.records.push_back(std::move(rec));
            trace.status = TerminalStatus::SubproblemFailure;
            trace.message = "direction subproblem: theta >= 0 with |d| >= eps";
            return trace;
        }
        try {
            rec.t = armijo_backtrack(problem, x, dir.d, dir.theta, config.sigma, config.gamma,
                                     config.max_halvings);
        } catch (const Error& e) {
            trace.records.push_back(std::move(rec));
            trace.status = TerminalStatus::SubproblemFailure;
            trace.message = e.what();
            return trace;
        }
        x = x + rec.t * dir.d;
        fx = eval_full(problem, x);
        trace.records.push_back(std::move(rec));
    }
}

SolveTrace npgmo_solve(const ProblemInstance& problem, const SolverConfig& config, const Vector& x0) {
    SolverConfig c = config;
    c.variant = NewtonVariant{};
    return solve(problem, c, x0);
}

SolveTrace pgmo_solve(const ProblemInstance& problem, const SolverConfig& config, const Vector& x0) {
    if (!config.is_pgmo()) throw ConfigError("solver.variant", "pgmo_solve needs the proximal gradient variant");
    return solve(problem, config, x0);
}

}  // namespace npgmo
