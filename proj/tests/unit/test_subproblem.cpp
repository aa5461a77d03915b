#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

#include "npgmo/subproblem.hpp"
#include "npgmo/zoo.hpp"

#include <array>
#include <cmath>

using namespace npgmo;
using namespace npgmo::testing;

TEST_CASE("project_simplex examples") {
    CHECK(project_simplex(vec({0.3, 0.7})).values().isApprox(vec({0.3, 0.7})));
    CHECK(project_simplex(vec({1, 1})).values().isApprox(vec({0.5, 0.5})));
    const Vector p = project_simplex(vec({0.9, 0.5, -0.2})).values();
    CHECK(p[0] == doctest::Approx(0.7));
    CHECK(p[1] == doctest::Approx(0.3));
    CHECK(p[2] == 0.0);
    CHECK_THROWS_AS(project_simplex(vec({NAN, 1})), InputError);
}

TEST_CASE("project_simplex matches the support-enumeration oracle and is idempotent") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(trial % 6);
        const Vector v = random_normal_vector(rng, m, 2.0);
        const Vector p = project_simplex(v).values();
        CHECK((p - simplex_projection_by_supports(v)).lpNorm<Eigen::Infinity>() <= 1e-8);
        CHECK(p.minCoeff() >= 0.0);
        CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
        CHECK((project_simplex(p).values() - p).lpNorm<Eigen::Infinity>() <= 1e-15);
    }
}

TEST_CASE("inner_minimize examples") {
    SmoothEval e;
    e.gradients = {vec({2, -2})};
    e.hessians = {Matrix::Identity(2, 2)};
    CHECK(inner_minimize(SimplexWeights::uniform(1), e, NonsmoothTerm{}, vec({0, 0})).d.isApprox(vec({-2, 2})));

    const SmoothEval l1 = eval_smooth(l1_scalar(), vec({3}));
    const InnerResult r = inner_minimize(SimplexWeights::uniform(1), l1, NonsmoothTerm{ScaledL1{1.0}}, vec({3}));
    CHECK(r.d[0] == doctest::Approx(-3.0).epsilon(1e-10));

    const SmoothEval bq = eval_smooth(biquadratic(), vec({2}));
    CHECK(inner_minimize(SimplexWeights::uniform(2), bq, NonsmoothTerm{}, vec({2})).d[0] == doctest::Approx(-2.0));

    SmoothEval flat;
    flat.gradients = {vec({1})};
    flat.hessians = {Matrix::Zero(1, 1)};
    CHECK_THROWS_AS(inner_minimize(SimplexWeights::uniform(1), flat, NonsmoothTerm{}, vec({0})), SingularMetricError);
    CHECK_THROWS_AS(inner_minimize(SimplexWeights::uniform(1), flat, NonsmoothTerm{ScaledL1{1.0}}, vec({0})),
                    SingularMetricError);
}

TEST_CASE("inner solution satisfies the first-order condition") {
    SplitMix64 rng(5);
    for (Family fam : {Family::QuadraticL1, Family::QuadraticBox}) {
        InstanceSpec s;
        s.family = fam;
        s.n = 8;
        s.m = 3;
        s.cond = 100.0;
        s.rho = 0.4;
        s.box_lo = -0.5;
        s.box_hi = 0.8;
        s.seed = 3;
        const ProblemInstance p = generate(s);
        for (int trial = 0; trial < 10; ++trial) {
            Vector x = random_normal_vector(rng, 8, 1.0);
            if (fam == Family::QuadraticBox) x = x.cwiseMax(-0.5).cwiseMin(0.8);
            const SmoothEval e = eval_smooth(p, x);
            const SimplexWeights lam = SimplexWeights::from_feasible(random_simplex(trial + 1, 3));
            const double tol = 1e-12;
            const InnerResult r = inner_minimize(lam, e, p.shared_nonsmooth(), x, {tol, 10000});
            Matrix h = Matrix::Zero(8, 8);
            Vector g = Vector::Zero(8);
            for (int i = 0; i < 3; ++i) {
                h += lam[i] * e.hessians[i];
                g += lam[i] * e.gradients[i];
            }
            const double lmax = h.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
            // -grad f_lambda - H d must be a subgradient of g at x + d; the
            // fixed-point residual converts to a subgradient error through the metric.
            // x + d can land an ulp inside a bound; snap those coordinates onto it.
            Vector u = x + r.d;
            if (fam == Family::QuadraticBox)
                for (Eigen::Index j = 0; j < 8; ++j)
                    for (double b : {-0.5, 0.8})
                        if (std::abs(u[j] - b) <= 1e-14) u[j] = b;
            const double dist = p.shared_nonsmooth().subdifferential_distance(u, -(g + h * r.d));
            CHECK(dist <= 10.0 * tol * std::max(1.0, 2.0 * lmax));
        }
    }
}

TEST_CASE("model_values and duality_gap examples") {
    const ProblemInstance bq = biquadratic();
    const SmoothEval e = eval_smooth(bq, vec({2}));
    CHECK(model_values(vec({0}), e, NonsmoothTerm{}, vec({2})) == Vector::Zero(2));
    const Vector psi = model_values(vec({-1}), e, NonsmoothTerm{}, vec({2}));
    CHECK(psi[0] == doctest::Approx(-0.5));
    CHECK(psi[1] == doctest::Approx(-2.5));

    const ProblemInstance l1 = l1_scalar();
    CHECK(model_values(vec({-3}), eval_smooth(l1, vec({3})), l1.shared_nonsmooth(), vec({3}))[0] ==
          doctest::Approx(-7.5));

    // Suboptimal weights (0, 1): d = -3, psi = (1.5, -4.5), gap = 6.
    const SimplexWeights w = SimplexWeights::from_feasible(vec({0, 1}));
    const Vector d = inner_minimize(w, e, NonsmoothTerm{}, vec({2})).d;
    CHECK(d[0] == doctest::Approx(-3.0));
    const Vector psi2 = model_values(d, e, NonsmoothTerm{}, vec({2}));
    CHECK(psi2[0] == doctest::Approx(1.5));
    CHECK(psi2[1] == doctest::Approx(-4.5));
    CHECK(duality_gap(w, psi2) == doctest::Approx(6.0));
    CHECK(duality_gap(SimplexWeights::uniform(1), vec({-3})) == 0.0);
}

TEST_CASE("solve_direction examples") {
    const ProblemInstance bq = biquadratic();
    const DirectionResult at0 = solve_direction(bq, vec({0}));
    CHECK(std::abs(at0.d[0]) <= 1e-10);
    CHECK(std::abs(at0.theta) <= 1e-10);

    DirectionOptions o;
    o.tol_gap = 1e-12;
    const DirectionResult at2 = solve_direction(bq, vec({2}), o);
    CHECK(at2.d[0] == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(at2.theta == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(at2.lambda[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(at2.gap <= o.tol_gap);

    const ProblemInstance l1 = l1_scalar();
    const DirectionResult r = solve_direction(l1, vec({3}));
    CHECK(r.d[0] == doctest::Approx(-3.0));
    CHECK(r.theta == doctest::Approx(-7.5));
    CHECK(r.theta <= -0.5 * l1.mu * r.d.squaredNorm());
    CHECK(r.gap == 0.0);
}

TEST_CASE("solve_direction matches the grid oracle on small random states") {
    int states = 0;
    for (std::uint64_t seed = 1; states < 25; ++seed) {
        InstanceSpec s;
        s.family = std::array{Family::Quadratic, Family::QuadraticL1, Family::QuadraticBox,
                              Family::LogSumExpReg}[seed % 4];
        s.n = 1 + seed % 2;
        s.m = 1 + seed % 3;
        s.cond = 10.0;
        s.rho = 0.5;
        s.seed = seed;
        const ProblemInstance p = generate(s);
        SplitMix64 rng(seed * 31);
        Vector x = random_normal_vector(rng, static_cast<Eigen::Index>(s.n), 1.0);
        if (s.family == Family::QuadraticBox) x = x.cwiseMax(s.box_lo).cwiseMin(s.box_hi);
        DirectionOptions o;
        o.tol_gap = 1e-10;
        const DirectionResult r = solve_direction(p, x, o);
        const GridResult grid = grid_theta(eval_smooth(p, x), p.shared_nonsmooth(), x, p.mu);
        CAPTURE(seed);
        CHECK(std::abs(r.theta - grid.theta) <= 1e-4);
        CHECK(r.gap <= o.tol_gap);
        CHECK(r.theta <= o.tol_gap);   // theta <= phi + gap and phi <= 0
        CHECK(r.theta <= -0.5 * p.mu * r.d.squaredNorm() + o.tol_gap);
        CHECK(r.dual_value <= r.theta + 1e-12);
        ++states;
    }
}

TEST_CASE("theta vanishes exactly at critical points") {
    // Weighted-sum minimizers with positive weights are Pareto critical.
    for (Family fam : {Family::Quadratic, Family::QuadraticL1, Family::QuadraticBox}) {
        InstanceSpec s;
        s.family = fam;
        s.n = 6;
        s.m = 3;
        s.cond = 30.0;
        s.rho = 0.3;
        s.seed = 9;
        const ProblemInstance p = generate(s);
        const Vector xc = weighted_sum_minimizer(p, vec({0.2, 0.5, 0.3}));
        DirectionOptions o;
        o.tol_gap = 1e-12;
        const DirectionResult at_c = solve_direction(p, xc, o);
        CHECK(at_c.d.norm() <= 1e-6);
        CHECK(at_c.theta >= -1e-10);
        Vector xn = xc;
        xn[0] += 1.0;
        if (fam == Family::QuadraticBox) xn = xn.cwiseMax(s.box_lo).cwiseMin(s.box_hi);
        if (xn != xc) CHECK(solve_direction(p, xn, o).theta < -1e-6);
    }
}

TEST_CASE("dual cap carries the best iterate") {
    InstanceSpec s;
    s.n = 10;
    s.m = 5;
    s.cond = 1e3;
    s.seed = 4;
    const ProblemInstance p = generate(s);
    DirectionOptions o;
    o.tol_gap = 1e-14;
    o.max_dual_iters = 1;
    try {
        solve_direction(p, Vector::Constant(10, 3.0), o);
        MESSAGE("one dual iteration happened to suffice");
    } catch (const DirectionNonconvergence& e) {
        CHECK(e.best().d.size() == 10);
        CHECK(e.best().gap > e.best().gap_target);
        CHECK(e.residual() == e.best().gap);
    }
}
