#pragma once

// Small hand-analyzed instances shared by unit and acceptance tests.

#include "npgmo/problem.hpp"
#include "npgmo/zoo.hpp"

#include <memory>

namespace npgmo::testing {

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline std::shared_ptr<const SmoothObjective> quad1d(double a, double b, double c = 0.0) {
    return std::make_shared<QuadraticObjective>(Matrix::Constant(1, 1, a), Vector::Constant(1, b), c);
}

/// f_1 = 1/2 (x-1)^2, f_2 = 1/2 (x+1)^2, g = 0. Pareto set [-1, 1].
inline ProblemInstance biquadratic() {
    ProblemInstance p;
    p.n = 1;
    p.m = 2;
    p.smooth = {quad1d(1.0, 1.0, 0.5), quad1d(1.0, -1.0, 0.5)};
    p.nonsmooth = {NonsmoothTerm{}, NonsmoothTerm{}};
    p.mu = 1.0;
    p.lip_hess = 0.0;
    p.validate();
    return p;
}

/// f = 1/2 x^2, g = |x|.
inline ProblemInstance l1_scalar() {
    ProblemInstance p;
    p.n = 1;
    p.m = 1;
    p.smooth = {quad1d(1.0, 0.0)};
    p.nonsmooth = {NonsmoothTerm{ScaledL1{1.0}}};
    p.mu = 1.0;
    p.validate();
    return p;
}

}  // namespace npgmo::testing
