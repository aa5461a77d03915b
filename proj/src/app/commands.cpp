#include "npgmo/commands.hpp"

#include "npgmo/analysis.hpp"
#include "npgmo/trace_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <ostream>
#include <thread>

namespace npgmo {
namespace {

std::filesystem::path output_path(const CommandOptions& o, const std::string& name, const std::string& field) {
    std::error_code ec;
    std::filesystem::create_directories(o.out, ec);
    if (ec) throw ConfigError("--out", "cannot create " + o.out.string() + ": " + ec.message());
    const std::filesystem::path p = o.out / name;
    std::ofstream probe(p, std::ios::app);
    if (!probe) throw ConfigError(field, "cannot write " + p.string());
    return p;
}

void write_file(const std::filesystem::path& p, const auto& writer) {
    std::ofstream out(p, std::ios::trunc);
    writer(out);
    if (!out) throw Error("failed writing " + p.string());
}

bool is_quadratic_config(const RunConfig& cfg) {
    if (cfg.is_inline()) return true;
    return std::get<InstanceSpec>(cfg.instance).family != Family::LogSumExpReg;
}

std::uint64_t base_seed(const RunConfig& cfg) {
    return cfg.is_inline() ? 0 : std::get<InstanceSpec>(cfg.instance).seed;
}

// Runs `body` on every index in [0, count) with up to `threads` workers.
// Exceptions are rethrown in index order after all workers finish.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

template <class Fn>
int guarded(std::ostream& err, Fn fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace

int exit_code(TerminalStatus status) noexcept {
    switch (status) {
        case TerminalStatus::CriticalReached: return kExitOk;
        case TerminalStatus::MaxIters: return kExitMaxIters;
        case TerminalStatus::SubproblemFailure: return kExitFailure;
    }
    return kExitFailure;
}

int cmd_solve(const CommandOptions& options, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(options.config);
        const std::uint64_t seed = options.seed_override.value_or(base_seed(cfg));
        const ProblemInstance problem = build_instance(cfg, seed);
        const SolverConfig solver = resolve_solver(cfg, problem);
        const Vector x0 = make_x0(cfg.run.x0, problem, seed);
        if (static_cast<std::size_t>(x0.size()) != problem.n) throw ConfigError("run.x0", "needs n entries");
        const auto trace_path = output_path(options, cfg.run.trace_csv, "run.trace_csv");

        const SolveTrace trace = solve(problem, solver, x0);
        write_file(trace_path, [&](std::ostream& out) { write_trace_csv(out, trace); });
        log << "status=" << to_string(trace.status) << " steps=" << trace.steps()
            << " final_dnorm=" << format_double(trace.records.back().dnorm);
        if (!trace.message.empty()) log << " message=\"" << trace.message << '"';
        log << '\n';
        return exit_code(trace.status);
    });
}

int cmd_bench(const CommandOptions& options, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(options.config);
        if (cfg.is_inline()) throw ConfigError("instance", "bench needs a generated instance family");
        if (!cfg.run.sweep) throw ConfigError("run.sweep", "required for bench");
        SweepSpec sweep = *cfg.run.sweep;
        if (options.seed_override) sweep.seeds = {*options.seed_override};
        const auto bench_path = output_path(options, cfg.run.bench_csv, "run.bench_csv");

        struct Cell {
            InstanceSpec spec;
            bool pgmo = false;
        };
        std::vector<Cell> cells;
        for (Family fam : sweep.families)
            for (double cond : sweep.cond)
                for (std::uint64_t seed : sweep.seeds)
                    for (bool pgmo : {false, true}) {
                        InstanceSpec s = std::get<InstanceSpec>(cfg.instance);
                        s.family = fam;
                        s.cond = cond;
                        s.seed = seed;
                        s.validate();
                        cells.push_back({s, pgmo});
                    }

        std::vector<BenchRow> rows(cells.size());
        std::vector<TerminalStatus> status(cells.size());
        parallel_for(cells.size(), options.threads, [&](std::size_t i) {
            const Cell& c = cells[i];
            const ProblemInstance problem = generate(c.spec);
            RunConfig run_cfg = cfg;
            if (c.pgmo) run_cfg.solver.variant = ProxGradientVariant{};
            else run_cfg.solver.variant = NewtonVariant{};
            const SolverConfig solver = resolve_solver(run_cfg, problem);
            const Vector x0 = make_x0(cfg.run.x0, problem, c.spec.seed);
            const auto t0 = std::chrono::steady_clock::now();
            const SolveTrace trace = solve(problem, solver, x0);
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            rows[i] = {to_string(c.spec.family), c.spec.cond, c.spec.seed, c.pgmo ? "pgmo" : "npgmo", trace.steps(),
                       trace.records.back().dnorm, cfg.run.record_wall_time ? ms : 0.0};
            status[i] = trace.status;
        });

        write_file(bench_path, [&](std::ostream& out) { write_bench_csv(out, rows); });
        int code = kExitOk;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            log << rows[i].family << " cond=" << format_double(rows[i].cond) << " seed=" << rows[i].seed << ' '
                << rows[i].solver << " iters=" << rows[i].iters << " status=" << to_string(status[i]) << '\n';
            code = std::max(code, exit_code(status[i]));
        }
        return code;
    });
}

int cmd_check(const CommandOptions& options, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(options.config);
        if (cfg.checks.empty()) throw ConfigError("checks", "name at least one check");
        for (std::size_t i = 0; i < cfg.checks.size(); ++i) {
            const std::string& name = cfg.checks[i];
            if ((name == "quadratic_termination" || name == "fundamental_ineq_quadratic") && !is_quadratic_config(cfg))
                throw ConfigError("checks[" + std::to_string(i) + "]", name + " needs a quadratic instance");
        }
        std::vector<std::uint64_t> seeds = cfg.run.check_seeds;
        if (seeds.empty()) seeds.push_back(base_seed(cfg));
        if (options.seed_override) seeds = {*options.seed_override};
        const auto report_path = output_path(options, cfg.run.report, "run.report");

        std::vector<std::vector<ReportRow>> per_seed(seeds.size());
        parallel_for(seeds.size(), options.threads, [&](std::size_t s) {
            const std::uint64_t seed = seeds[s];
            const ProblemInstance problem = build_instance(cfg, seed);
            const SolverConfig solver = resolve_solver(cfg, problem);
            const Vector x0 = make_x0(cfg.run.x0, problem, seed);
            const SolveTrace trace = solve(problem, solver, x0);
            auto& out = per_seed[s];
            out.push_back({seed, "solve",
                           {"status", trace.status != TerminalStatus::SubproblemFailure, 0.0,
                            to_string(trace.status) + (trace.message.empty() ? "" : ": " + trace.message)}});

            std::optional<RateReport> rates;
            auto rate_report = [&]() -> const RateReport& {
                if (!rates) {
                    const Vector x_star = reference_solution(problem, solver, trace.final_x());
                    rates = analyze_rates(trace, problem, x_star, solver.sigma);
                    if (!cfg.run.tau_eps.empty())
                        rates->tau = tau_check(trace, x_star, problem.mu, solver.sigma, cfg.run.tau_eps);
                }
                return *rates;
            };
            auto pick = [&](const std::string& check, std::initializer_list<const char*> names,
                            const std::vector<CheckVerdict>& from) {
                for (const auto& v : from)
                    for (const char* n : names)
                        if (v.name == n) out.push_back({seed, check, v});
            };

            for (const auto& name : cfg.checks) {
                if (name == "quadratic_termination") {
                    std::vector<Vector> batch;
                    for (std::size_t i = 0; i < cfg.run.x0_batch; ++i) batch.push_back(make_x0(cfg.run.x0, problem, seed, i));
                    out.push_back({seed, name, check_quadratic_termination(problem, solver, batch)});
                } else if (name == "descent_bound") {
                    out.push_back({seed, name, check_descent_bound(trace, problem.mu)});
                } else if (name == "sufficient_decrease") {
                    out.push_back({seed, name, check_sufficient_decrease(trace, solver.sigma)});
                } else if (name == "fundamental_ineq_quadratic") {
                    const auto probes = random_probes(trace, cfg.run.probes_per_iteration, seed);
                    out.push_back({seed, name, check_fundamental_inequality_quadratic(trace, problem, probes)});
                } else if (name == "order_fit") {
                    pick(name, {"order_fit", "superlinear_ratios"}, rate_report().verdicts);
                } else if (name == "quadratic_rate") {
                    pick(name, {"quadratic_constant", "quadratic_limit"}, rate_report().verdicts);
                } else if (name == "tau_bracket") {
                    pick(name, {"tau_applicable", "tau_final_near_one", "tau_tail_in_bracket"}, rate_report().tau.verdicts);
                }
            }
        });

        std::vector<ReportRow> rows;
        for (auto& v : per_seed) rows.insert(rows.end(), v.begin(), v.end());
        write_file(report_path, [&](std::ostream& out) { write_report_csv(out, rows); });
        bool all = true;
        for (const auto& r : rows) {
            log << (r.verdict.passed ? "PASS " : "FAIL ") << "seed=" << r.seed << ' ' << r.check << '/'
                << r.verdict.name << " margin=" << format_double(r.verdict.margin) << ' ' << r.verdict.detail << '\n';
            all = all && r.verdict.passed;
        }
        return all ? kExitOk : kExitCheckFailed;
    });
}

}  // namespace npgmo
