#include <doctest.h>

#include "fixtures.hpp"

#include "npgmo/analysis.hpp"
#include "npgmo/driver.hpp"
#include "npgmo/zoo.hpp"

#include <cmath>

using namespace npgmo;
using namespace npgmo::testing;

TEST_CASE("armijo_backtrack examples") {
    const ProblemInstance l1 = l1_scalar();
    CHECK(armijo_backtrack(l1, vec({3}), vec({-3}), -7.5, 0.5, 0.5) == 1.0);
    CHECK_THROWS_AS(armijo_backtrack(l1, vec({3}), vec({0}), -7.5, 0.5, 0.5), InputError);
    CHECK_THROWS_AS(armijo_backtrack(l1, vec({3}), vec({-3}), 0.0, 0.5, 0.5), InputError);
    // A claimed decrease far beyond what F can deliver exhausts the halvings.
    CHECK_THROWS_AS(armijo_backtrack(l1, vec({3}), vec({-3}), -1e6, 0.5, 0.5, 5), LineSearchError);
    // Backtracking into the box: the full step leaves it, half the step does not.
    ProblemInstance boxed = attach_nonsmooth(biquadratic(), NonsmoothTerm{BoxIndicator{vec({-1}), vec({2})}});
    CHECK(armijo_backtrack(boxed, vec({1.9}), vec({0.2}), -1e-9, 0.1, 0.5) <= 0.5);
}

TEST_CASE("sufficient decrease test includes only a rounding allowance") {
    CHECK(sufficient_decrease(vec({1.0}), vec({0.5}), 1.0, 0.5, -1.0));
    CHECK_FALSE(sufficient_decrease(vec({1.0}), vec({0.6}), 1.0, 0.5, -1.0));
    CHECK_FALSE(sufficient_decrease(vec({1.0}), vec({kInf}), 1.0, 0.5, -1.0));
    CHECK(decrease_allowance(1e8, 1e8) == doctest::Approx(32.0 * kMachineEps * 1e8));
}

TEST_CASE("npgmo_solve examples") {
    SolverConfig c;
    c.tol_gap = 1e-12;
    const SolveTrace t = npgmo_solve(biquadratic(), c, vec({2}));
    REQUIRE(t.status == TerminalStatus::CriticalReached);
    REQUIRE(t.steps() == 1);
    CHECK(t.records[0].t == 1.0);
    CHECK(t.records[1].x[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(t.records[1].dnorm <= 1e-8);

    const SolveTrace crit = npgmo_solve(biquadratic(), c, vec({0}));
    CHECK(crit.status == TerminalStatus::CriticalReached);
    CHECK(crit.records.size() == 1);

    const SolveTrace l1 = npgmo_solve(l1_scalar(), c, vec({3}));
    CHECK(l1.status == TerminalStatus::CriticalReached);
    CHECK(l1.steps() == 1);
    CHECK(l1.records[1].x[0] == doctest::Approx(0.0));

    SolverConfig capped = c;
    capped.max_outer = 0;
    const SolveTrace cap = npgmo_solve(biquadratic(), capped, vec({2}));
    CHECK(cap.status == TerminalStatus::MaxIters);
    CHECK(cap.records.size() == 1);
    CHECK_THROWS_AS(npgmo_solve(biquadratic(), c, vec({2, 3})), InputError);
}

TEST_CASE("pgmo examples") {
    SolverConfig c;
    c.variant = ProxGradientVariant{4.0};
    InstanceSpec s;
    s.n = 4;
    s.m = 1;
    s.cond = 4.0;
    s.seed = 2;
    const ProblemInstance p = generate(s);
    const Vector x = vec({1, -1, 2, 0.5});
    const DirectionResult r = solve_direction(direction_model(p, c, x), p.shared_nonsmooth(), x);
    CHECK((r.d + eval_smooth(p, x).gradients[0] / 4.0).norm() <= 1e-10);

    // A_i = ell I for every objective: both variants solve the same subproblems.
    InstanceSpec iso;
    iso.n = 3;
    iso.m = 2;
    iso.cond = 1.0;
    iso.mu = 2.5;
    iso.seed = 8;
    const ProblemInstance q = generate(iso);
    SolverConfig pg;
    pg.variant = ProxGradientVariant{2.5};
    const SolveTrace a = npgmo_solve(q, SolverConfig{}, vec({1, 2, 3}));
    const SolveTrace b = pgmo_solve(q, pg, vec({1, 2, 3}));
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) CHECK((a.records[k].x - b.records[k].x).norm() <= 1e-12);

    CHECK_THROWS_AS(pgmo_solve(q, SolverConfig{}, vec({1, 2, 3})), ConfigError);
}

TEST_CASE("solver config validation names the field") {
    SolverConfig c;
    c.sigma = 1.5;
    try {
        c.validate();
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "solver.sigma");
    }
    c = SolverConfig{};
    c.variant = ProxGradientVariant{0.0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("trace invariants on generated instances") {
    for (Family fam : {Family::Quadratic, Family::QuadraticL1, Family::QuadraticBox, Family::LogSumExpReg}) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            InstanceSpec s;
            s.family = fam;
            s.n = 6;
            s.m = 3;
            s.cond = 100.0;
            s.rho = 0.2;
            s.seed = seed;
            const ProblemInstance p = generate(s);
            SplitMix64 rng(seed);
            Vector x0 = random_normal_vector(rng, 6, 2.0);
            if (fam == Family::QuadraticBox) x0 = x0.cwiseMax(s.box_lo).cwiseMin(s.box_hi);
            for (bool pgmo : {false, true}) {
                SolverConfig c;
                c.max_outer = 5000;
                if (pgmo) c.variant = ProxGradientVariant{*p.lip_grad};
                const SolveTrace t = solve(p, c, x0);
                CAPTURE(to_string(fam));
                CAPTURE(seed);
                CAPTURE(pgmo);
                CHECK(t.status == TerminalStatus::CriticalReached);
                CHECK(check_sufficient_decrease(t, c.sigma).passed);
                CHECK(check_monotone_values(t).passed);
                if (!pgmo) CHECK(check_descent_bound(t, p.mu).passed);
                for (std::size_t k = 0; k + 1 < t.records.size(); ++k) CHECK(t.records[k].theta < 0.0);
            }
        }
    }
}
