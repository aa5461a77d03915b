#include "npgmo/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Newton-type proximal gradient solver for multiobjective composite problems"};
    app.require_subcommand(1, 1);

    npgmo::CommandOptions opts;
    std::uint64_t seed_override = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "JSON run configuration")->required();
        sub->add_option("--out", opts.out, "output directory")->capture_default_str();
        sub->add_option("--seed-override", seed_override, "replace the instance seed(s)");
        sub->add_option("--threads", opts.threads, "worker threads for bench and check")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    };
    CLI::App* solve = app.add_subcommand("solve", "run one solve and write its trace");
    CLI::App* bench = app.add_subcommand("bench", "run NPGMO and PGMO over a sweep");
    CLI::App* check = app.add_subcommand("check", "run named analysis checks");
    for (CLI::App* sub : {solve, bench, check}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return npgmo::kExitConfig;
    }

    for (CLI::App* sub : {solve, bench, check})
        if (sub->count("--seed-override")) opts.seed_override = seed_override;

    if (*solve) return npgmo::cmd_solve(opts, std::cout, std::cerr);
    if (*bench) return npgmo::cmd_bench(opts, std::cout, std::cerr);
    return npgmo::cmd_check(opts, std::cout, std::cerr);
}
