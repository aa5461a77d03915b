#pragma once

// Run configuration: one JSON document with sections instance, solver, run
// and checks. Unknown keys anywhere are rejected with a ConfigError naming the
// offending field path.

#include "npgmo/driver.hpp"
#include "npgmo/problem.hpp"
#include "npgmo/zoo.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace npgmo {

/// Quadratic objectives given explicitly: f_i(x) = 1/2 x'A_i x - b_i'x + c_i.
struct InlineQuadratic {
    std::vector<Matrix> a;
    std::vector<Vector> b;
    std::vector<double> c;
    NonsmoothTerm nonsmooth;
    std::optional<double> mu;   // smallest eigenvalue over all A_i when absent
};

/// Starting point: explicit, or seed-derived standard normal times scale.
struct X0Spec {
    std::optional<Vector> value;
    std::uint64_t seed = 1;
    double scale = 1.0;
};

struct SweepSpec {
    std::vector<Family> families;
    std::vector<double> cond;
    std::vector<std::uint64_t> seeds;
};

struct RunSection {
    X0Spec x0;
    std::size_t x0_batch = 1;                 // starting points per instance in checks
    std::size_t probes_per_iteration = 20;    // fundamental_ineq_quadratic
    std::vector<double> tau_eps;              // empty: (1 - sigma) mu only
    std::vector<std::uint64_t> check_seeds;   // empty: instance.seed only
    std::string trace_csv = "trace.csv";
    std::string report = "report.csv";
    std::string bench_csv = "bench.csv";
    bool record_wall_time = false;            // wall_ms is 0 unless enabled
    std::optional<SweepSpec> sweep;
};

struct RunConfig {
    std::variant<InstanceSpec, InlineQuadratic> instance;
    SolverConfig solver;
    std::optional<double> ell;                // PGMO metric; lip_grad of the instance when absent
    RunSection run;
    std::vector<std::string> checks;

    bool is_inline() const noexcept { return std::holds_alternative<InlineQuadratic>(instance); }
};

/// Names accepted in the checks section.
const std::vector<std::string>& check_registry();

RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Instance for the config; `seed` replaces instance.seed for generated families.
ProblemInstance build_instance(const RunConfig& config, std::optional<std::uint64_t> seed = std::nullopt);

/// Solver settings with the PGMO metric resolved against the instance.
SolverConfig resolve_solver(const RunConfig& config, const ProblemInstance& problem);

/// Starting point for an instance. Index 0 is the configured point; further
/// indices are seeded draws (around the explicit x0 when one is given).
Vector make_x0(const X0Spec& spec, const ProblemInstance& problem, std::uint64_t instance_seed,
               std::size_t index = 0);

}  // namespace npgmo
