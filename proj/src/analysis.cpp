#include "npgmo/analysis.hpp"

#include "npgmo/subproblem.hpp"
#include "npgmo/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace npgmo {
namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

CheckVerdict verdict(std::string name, double margin, std::string detail) {
    return {std::move(name), margin >= 0.0, margin, std::move(detail)};
}

}  // namespace

double criticality_measure(const ProblemInstance& problem, const Vector& x, double tol_gap) {
    DirectionOptions opts;
    opts.tol_gap = tol_gap;
    return solve_direction(problem, x, opts).d.norm();
}

// ---------------------------------------------------------------------------
// Order estimation

std::vector<std::size_t> fit_tail(std::span<const double> errors, double noise_floor) {
    // Last index above the floor, then walk back while strictly decreasing.
    std::size_t end = errors.size();
    while (end > 0 && !(errors[end - 1] > noise_floor)) --end;
    if (end == 0) return {};
    std::size_t begin = end - 1;
    while (begin > 0 && errors[begin - 1] > errors[begin] && std::isfinite(errors[begin - 1])) --begin;
    const std::size_t run = end - begin;
    const auto want = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(0.4 * static_cast<double>(run))));
    const std::size_t take = std::min(run, want);
    std::vector<std::size_t> idx;
    for (std::size_t k = end - take; k < end; ++k) idx.push_back(k);
    return idx;
}

OrderFit estimate_order(std::span<const double> errors, double noise_floor) {
    const auto idx = fit_tail(errors, noise_floor);
    if (idx.size() < 4)
        throw InsufficientDataError("order estimation needs >= 4 decreasing errors above the noise floor (got " +
                                    std::to_string(idx.size()) + ")");
    const std::size_t pairs = idx.size() - 1;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t p = 0; p < pairs; ++p) {
        const double lx = std::log(errors[idx[p]]);
        const double ly = std::log(errors[idx[p + 1]]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double np = static_cast<double>(pairs);
    const double denom = np * sxx - sx * sx;
    if (!(std::abs(denom) > 0.0)) throw InsufficientDataError("degenerate error sequence");
    OrderFit fit;
    fit.q = (np * sxy - sx * sy) / denom;
    fit.c = std::exp((sy - fit.q * sx) / np);
    fit.points = idx.size();
    return fit;
}

// ---------------------------------------------------------------------------
// tau_k

TauBracket tau_bracket(double eps, double mu, double sigma) {
    if (!(mu > 0.0)) throw InputError("tau_bracket: mu must be positive");
    if (!(sigma > 0.0 && sigma < 1.0)) throw InputError("tau_bracket: sigma must lie in (0, 1)");
    if (!(eps > 0.0) || eps > (1.0 - sigma) * mu)
        throw InputError("tau_bracket: eps must lie in (0, (1 - sigma) mu]");
    const double r = std::sqrt(2.0 * mu * eps - eps * eps);
    return {(mu - r) / (mu - eps), (mu + r) / (mu - eps)};
}

Vector reference_solution(const ProblemInstance& problem, const SolverConfig& config, const Vector& start) {
    SolverConfig c = config;
    c.variant = NewtonVariant{};
    c.eps = kReferenceEps;
    c.tol_gap = std::min(config.tol_gap, 1e-12);
    c.max_outer = std::max<std::size_t>(config.max_outer, 200);
    const SolveTrace t = solve(problem, c, start);
    if (t.status != TerminalStatus::CriticalReached)
        throw NonconvergenceError("reference solve did not reach |d| <= 1e-12: " + t.message,
                                  t.records.back().dnorm);
    return t.final_x();
}

std::vector<double> error_sequence(const SolveTrace& trace, const Vector& x_star) {
    std::vector<double> e;
    e.reserve(trace.records.size());
    for (const auto& r : trace.records) e.push_back((r.x - x_star).norm());
    return e;
}

double rate_noise_floor(const Vector& x_star) noexcept {
    return std::max(1e-13 * (1.0 + x_star.norm()), 10.0 * kReferenceEps);
}

namespace {

double tau_floor(const Vector& x_star) {
    return std::max(10.0 * kMachineEps * x_star.norm(), rate_noise_floor(x_star));
}

}  // namespace

TauReport tau_check(const SolveTrace& trace, const Vector& x_star, double mu, double sigma,
                    std::span<const double> eps_list) {
    TauReport rep;
    const auto& recs = trace.records;
    const auto errors = error_sequence(trace, x_star);
    const double floor = tau_floor(x_star);

    std::vector<std::size_t> measurable;
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
        if (!(errors[k] > floor)) break;
        rep.tau.push_back((recs[k + 1].x - recs[k].x).norm() / errors[k]);
        measurable.push_back(k);
    }
    rep.applicable = trace.steps() > 0 && recs[recs.size() - 2].t == 1.0 && !measurable.empty();
    if (!measurable.empty()) {
        rep.final_tau = rep.tau.back();
        rep.orders_spanned = std::log10(errors.front() / errors[measurable.back()]);
    }

    for (double eps : eps_list) {
        TauEpsReport r;
        r.eps = eps;
        r.bracket = tau_bracket(eps, mu, sigma);
        std::size_t first = rep.tau.size();
        while (first > 0 && r.bracket.contains(rep.tau[first - 1])) --first;
        if (first < rep.tau.size()) r.first_k_inside = first;
        rep.per_eps.push_back(r);
    }

    if (!rep.applicable) {
        rep.verdicts.push_back({"tau_applicable", false, -1.0, "no unit-step tail with measurable errors"});
        return rep;
    }
    if (rep.orders_spanned >= 4.0) {
        const double dev = std::abs(*rep.final_tau - 1.0);
        rep.verdicts.push_back(verdict("tau_final_near_one", 0.05 - dev,
                                       "final tau " + fmt(*rep.final_tau) + " over " +
                                           fmt(rep.orders_spanned) + " orders"));
    } else {
        rep.verdicts.push_back({"tau_final_near_one", true, 0.0,
                                "not applicable: errors span only " + fmt(rep.orders_spanned) + " orders"});
    }

    // Tail: the same points used by the order fit, restricted to measurable tau.
    const double widest = (1.0 - sigma) * mu;
    const TauBracket br = tau_bracket(widest, mu, sigma);
    auto tail = fit_tail(errors, floor);
    double worst = kInf;
    std::size_t counted = 0;
    for (std::size_t k : tail) {
        if (k >= rep.tau.size()) continue;
        worst = std::min({worst, rep.tau[k] - br.lo, br.hi - rep.tau[k]});
        ++counted;
    }
    if (counted == 0) worst = -1.0;
    rep.verdicts.push_back(verdict("tau_tail_in_bracket", worst,
                                   std::to_string(counted) + " tail taus vs [" + fmt(br.lo) + ", " +
                                       fmt(br.hi) + "] at eps=(1-sigma)mu"));
    return rep;
}

RateReport analyze_rates(const SolveTrace& trace, const ProblemInstance& problem, const Vector& x_star,
                         double sigma) {
    RateReport rep;
    rep.errors = error_sequence(trace, x_star);
    const double floor = rate_noise_floor(x_star);
    const auto tail = fit_tail(rep.errors, floor);

    try {
        rep.order = estimate_order(rep.errors, floor);
        rep.verdicts.push_back(verdict("order_fit", rep.order.q - 1.5,
                                       "q=" + fmt(rep.order.q) + " C=" + fmt(rep.order.c) + " from " +
                                           std::to_string(rep.order.points) + " points"));
    } catch (const InsufficientDataError& e) {
        rep.verdicts.push_back({"order_fit", false, -1.0, e.what()});
    }

    for (std::size_t p = 0; p + 1 < tail.size(); ++p) {
        const double a = rep.errors[tail[p]];
        const double b = rep.errors[tail[p + 1]];
        rep.tail_ratios.push_back(b / a);
        rep.tail_quadratic.push_back(b / (a * a));
    }
    {
        // Strict decrease: the smallest consecutive drop must be positive.
        double margin = rep.tail_ratios.size() >= 2 ? kInf : -1.0;
        for (std::size_t p = 0; p + 1 < rep.tail_ratios.size(); ++p)
            margin = std::min(margin, rep.tail_ratios[p] - rep.tail_ratios[p + 1]);
        rep.verdicts.push_back({"superlinear_ratios", margin > 0.0, margin,
                                std::to_string(rep.tail_ratios.size()) + " tail ratios e_{k+1}/e_k"});
    }

    if (problem.lip_hess && *problem.lip_hess > 0.0 && !rep.tail_quadratic.empty()) {
        const double limit = *problem.lip_hess / problem.mu;
        const double worst = *std::max_element(rep.tail_quadratic.begin(), rep.tail_quadratic.end());
        rep.verdicts.push_back(verdict("quadratic_constant", 10.0 * limit - worst,
                                       "max e_{k+1}/e_k^2 = " + fmt(worst) + " vs 10 L2/mu = " + fmt(10.0 * limit)));
        const double last = rep.tail_quadratic.back();
        const double log_dev = std::abs(std::log10(last / limit));
        rep.verdicts.push_back(verdict("quadratic_limit", 1.0 - log_dev,
                                       "final e_{k+1}/e_k^2 = " + fmt(last) + " vs L2/mu = " + fmt(limit)));
    }

    const double widest = (1.0 - sigma) * problem.mu;
    const double eps_list[] = {widest, 0.5 * widest, 0.1 * widest, 0.01 * widest};
    rep.tau = tau_check(trace, x_star, problem.mu, sigma, eps_list);
    rep.verdicts.insert(rep.verdicts.end(), rep.tau.verdicts.begin(), rep.tau.verdicts.end());
    return rep;
}

// ---------------------------------------------------------------------------
// Trace checks

CheckVerdict check_descent_bound(const SolveTrace& trace, double mu, double tol) {
    double worst = kInf;
    std::size_t checked = 0;
    for (const auto& r : trace.records) {
        if (!std::isfinite(r.theta) || !std::isfinite(r.dnorm)) continue;
        worst = std::min(worst, -0.5 * mu * r.dnorm * r.dnorm + tol - r.theta);
        ++checked;
    }
    if (checked == 0) return {"descent_bound", false, -1.0, "no directions recorded"};
    return verdict("descent_bound", worst, std::to_string(checked) + " iterations");
}

CheckVerdict check_sufficient_decrease(const SolveTrace& trace, double sigma) {
    double worst = kInf;
    std::size_t steps = 0;
    std::size_t within_rounding = 0;
    const auto& recs = trace.records;
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
        const auto& a = recs[k];
        const auto& b = recs[k + 1];
        if (!(a.t > 0.0)) continue;
        ++steps;
        bool used_allowance = false;
        for (Eigen::Index i = 0; i < a.f.size(); ++i) {
            const double slack = a.t * sigma * a.theta - (b.f[i] - a.f[i]);
            const double allowance = decrease_allowance(a.f[i], b.f[i]);
            if (slack < 0.0) used_allowance = true;
            worst = std::min(worst, slack + allowance);
        }
        if (used_allowance) ++within_rounding;
        if (!sufficient_decrease(a.f, b.f, a.t, sigma, a.theta)) worst = std::min(worst, -kMachineEps);
    }
    if (steps == 0) return {"sufficient_decrease", true, 0.0, "no steps taken"};
    return verdict("sufficient_decrease", worst,
                   std::to_string(steps) + " steps, " + std::to_string(within_rounding) +
                       " decided within the rounding allowance");
}

CheckVerdict check_monotone_values(const SolveTrace& trace) {
    double worst = kInf;
    const auto& recs = trace.records;
    for (std::size_t k = 0; k + 1 < recs.size(); ++k)
        for (Eigen::Index i = 0; i < recs[k].f.size(); ++i)
            worst = std::min(worst, recs[k].f[i] - recs[k + 1].f[i] + decrease_allowance(recs[k].f[i], recs[k + 1].f[i]));
    if (recs.size() < 2) return {"monotone_values", true, 0.0, "single record"};
    return verdict("monotone_values", worst, std::to_string(recs.size() - 1) + " transitions");
}

CheckVerdict check_unit_step_tail(const SolveTrace& trace, double skip_fraction) {
    const std::size_t steps = trace.steps();
    if (steps == 0) return {"unit_step_tail", true, 0.0, "no steps taken"};
    const auto skip = static_cast<std::size_t>(std::ceil(skip_fraction * static_cast<double>(steps)));
    std::size_t bad = 0;
    for (std::size_t k = skip; k < steps; ++k)
        if (trace.records[k].t != 1.0) ++bad;
    return {"unit_step_tail", bad == 0, -static_cast<double>(bad),
            std::to_string(steps - std::min(skip, steps)) + " tail steps, " + std::to_string(bad) + " with t < 1"};
}

CheckVerdict check_quadratic_termination(const ProblemInstance& problem, const SolverConfig& config,
                                         std::span<const Vector> x0_batch) {
    if (!problem.is_quadratic()) return {"quadratic_termination", false, -1.0, "instance is not quadratic"};
    SolverConfig c = config;
    c.variant = NewtonVariant{};
    c.max_outer = 1;  // only the first step is under test
    const double bound = 10.0 * std::sqrt(c.tol_gap);
    double worst = kInf;
    std::size_t failures = 0;
    double worst_measure = 0.0;
    std::string first_failure;
    auto fail = [&](std::size_t i, const std::string& why) {
        if (failures++ == 0) first_failure = "; start " + std::to_string(i) + ": " + why;
    };
    for (std::size_t i = 0; i < x0_batch.size(); ++i) {
        const SolveTrace t = solve(problem, c, x0_batch[i]);
        if (t.steps() == 0) {
            if (t.status == TerminalStatus::SubproblemFailure) {
                worst = std::min(worst, -1.0);
                fail(i, t.message);
                continue;
            }
            worst = std::min(worst, bound - t.records.front().dnorm);
            continue;  // x0 already critical
        }
        if (t.records[0].t != 1.0) {
            worst = std::min(worst, t.records[0].t - 1.0);
            fail(i, "t_0 = " + fmt(t.records[0].t));
        }
        double measure = kInf;
        try {
            measure = criticality_measure(problem, t.records[1].x, c.tol_gap);
        } catch (const DirectionNonconvergence& e) {
            measure = e.best().d.norm();
        }
        worst_measure = std::max(worst_measure, measure);
        worst = std::min(worst, bound - measure);
        if (!(measure <= bound)) fail(i, "|d(x^1)| = " + fmt(measure));
    }
    return {"quadratic_termination", failures == 0 && worst >= 0.0, worst,
            std::to_string(x0_batch.size()) + " starts, worst |d(x^1)| = " + fmt(worst_measure) + " vs " +
                fmt(bound) + first_failure};
}

CheckVerdict check_fundamental_inequality_quadratic(const SolveTrace& trace, const ProblemInstance& problem,
                                                    std::span<const Vector> probes, double tol) {
    if (!problem.is_quadratic()) return {"fundamental_ineq_quadratic", false, -1.0, "instance is not quadratic"};
    std::vector<const QuadraticObjective*> quads;
    for (const auto& f : problem.smooth) quads.push_back(dynamic_cast<const QuadraticObjective*>(f.get()));

    double worst = kInf;
    std::size_t iterations = 0;
    const auto& recs = trace.records;
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
        if (recs[k].t != 1.0) continue;
        ++iterations;
        const Vector& lambda = recs[k].lambda;
        const Vector& next = recs[k + 1].x;
        Matrix a_lambda = Matrix::Zero(static_cast<Eigen::Index>(problem.n), static_cast<Eigen::Index>(problem.n));
        for (std::size_t i = 0; i < problem.m; ++i) a_lambda += lambda[static_cast<Eigen::Index>(i)] * quads[i]->matrix();
        const Vector f_next = eval_full(problem, next);
        const double flam_next = lambda.dot(f_next);
        for (const auto& p : probes) {
            const Vector fp = eval_full(problem, p);
            if (!fp.allFinite()) continue;  // outside dom g: the inequality holds trivially
            const Vector diff = next - p;
            const double lhs = flam_next - lambda.dot(fp);
            const double rhs = -0.5 * diff.dot(a_lambda * diff);
            worst = std::min(worst, rhs - lhs);
        }
    }
    if (iterations == 0) return {"fundamental_ineq_quadratic", false, -1.0, "no unit-step iterations"};
    CheckVerdict v{"fundamental_ineq_quadratic", worst >= -tol, worst,
                   std::to_string(iterations) + " unit-step iterations x " + std::to_string(probes.size()) +
                       " probes, tolerance " + fmt(tol)};
    return v;
}

std::vector<Vector> random_probes(const SolveTrace& trace, std::size_t per_iteration, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<Vector> probes;
    const auto& recs = trace.records;
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
        if (recs[k].t != 1.0) continue;
        const double scale = std::max(1.0, (recs[k + 1].x - recs[k].x).norm());
        for (std::size_t j = 0; j < per_iteration; ++j)
            probes.push_back(recs[k + 1].x + random_normal_vector(rng, recs[k].x.size(), scale));
    }
    return probes;
}

}  // namespace npgmo
