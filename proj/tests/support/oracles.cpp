#include "oracles.hpp"

#include "npgmo/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace npgmo::testing {

double model_max(const SmoothEval& eval, const NonsmoothTerm& g, const Vector& x, const Vector& d) {
    const double shift = g.value(x + d) - g.value(x);
    double best = -kInf;
    for (std::size_t i = 0; i < eval.gradients.size(); ++i) {
        const double v = eval.gradients[i].dot(d) + shift + 0.5 * d.dot(eval.hessians[i] * d);
        best = std::max(best, v);
    }
    return best;
}

GridResult grid_theta(const SmoothEval& eval, const NonsmoothTerm& g, const Vector& x, double mu, int points) {
    const auto n = x.size();
    if (n > 2) throw std::invalid_argument("grid_theta: n <= 2 only");
    // psi_i(d) >= <a_i, d> - rho |d|_1 + mu/2 |d|^2, so psi_i(d) < 0 forces
    // |d| < 2 (|a_i| + rho sqrt(n)) / mu. d = 0 gives 0, so the minimum is inside.
    double rho = 0.0;
    if (const auto* l1 = g.as_l1()) rho = l1->rho;
    double amax = 0.0;
    for (const auto& a : eval.gradients) amax = std::max(amax, a.norm());
    double radius = 2.0 * (amax + rho * std::sqrt(static_cast<double>(n))) / mu + 1e-12;

    GridResult best{0.0, Vector::Zero(n)};
    Vector center = Vector::Zero(n);
    for (int level = 0; level < 4; ++level) {
        const double h = 2.0 * radius / (points - 1);
        Vector d(n);
        const int jmax = n == 2 ? points : 1;
        for (int i = 0; i < points; ++i) {
            for (int j = 0; j < jmax; ++j) {
                d[0] = center[0] - radius + i * h;
                if (n == 2) d[1] = center[1] - radius + j * h;
                const double v = model_max(eval, g, x, d);
                if (v < best.theta) {
                    best.theta = v;
                    best.d = d;
                }
            }
        }
        center = best.d;
        radius = 4.0 * h;
    }
    return best;
}

Vector simplex_projection_by_supports(const Vector& v) {
    const auto m = v.size();
    if (m > 20) throw std::invalid_argument("support enumeration: m too large");
    Vector best;
    double best_dist = kInf;
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        // On support S: u_S = v_S - tau with sum u_S = 1.
        double sum = 0.0;
        int k = 0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (mask & (1u << i)) {
                sum += v[i];
                ++k;
            }
        const double tau = (sum - 1.0) / k;
        Vector u = Vector::Zero(m);
        bool ok = true;
        for (Eigen::Index i = 0; i < m; ++i)
            if (mask & (1u << i)) {
                u[i] = v[i] - tau;
                if (u[i] < 0.0) ok = false;
            }
        if (!ok) continue;
        const double dist = (u - v).squaredNorm();
        if (dist < best_dist) {
            best_dist = dist;
            best = u;
        }
    }
    return best;
}

Vector weighted_sum_minimizer(const ProblemInstance& p, const Vector& w, std::size_t sweeps, double tol) {
    const auto n = static_cast<Eigen::Index>(p.n);
    Matrix a = Matrix::Zero(n, n);
    Vector b = Vector::Zero(n);
    for (std::size_t i = 0; i < p.m; ++i) {
        const auto* q = dynamic_cast<const QuadraticObjective*>(p.smooth[i].get());
        if (q == nullptr) throw std::invalid_argument("weighted_sum_minimizer: quadratic objectives only");
        a += w[static_cast<Eigen::Index>(i)] * q->matrix();
        b += w[static_cast<Eigen::Index>(i)] * q->linear();
    }
    const NonsmoothTerm& g = p.shared_nonsmooth();
    Vector x = Vector::Zero(n);
    if (const auto* box = g.as_box()) x = x.cwiseMax(box->lo).cwiseMin(box->hi);
    for (std::size_t s = 0; s < sweeps; ++s) {
        double moved = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            // Minimize 1/2 a_jj t^2 + (a_j.x - a_jj x_j - b_j) t + g_j(t).
            const double rest = a.row(j).dot(x) - a(j, j) * x[j] - b[j];
            double t = -rest / a(j, j);
            if (const auto* l1 = g.as_l1()) {
                const double thr = l1->rho / a(j, j);
                t = t > thr ? t - thr : (t < -thr ? t + thr : 0.0);
            } else if (const auto* box = g.as_box()) {
                t = std::clamp(t, box->lo[j], box->hi[j]);
            }
            moved = std::max(moved, std::abs(t - x[j]));
            x[j] = t;
        }
        if (moved <= tol) break;
    }
    return x;
}

Vector fd_gradient(const SmoothObjective& f, const Vector& x, double h) {
    Vector g(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        g[j] = (f.value(xp) - f.value(xm)) / (2.0 * h);
    }
    return g;
}

Matrix fd_hessian(const SmoothObjective& f, const Vector& x, double h) {
    Matrix hess(x.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        hess.col(j) = (f.evaluate(xp).gradient - f.evaluate(xm).gradient) / (2.0 * h);
    }
    return 0.5 * (hess + hess.transpose());
}

double rel_err(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

Vector random_simplex(std::uint64_t seed, Eigen::Index m, bool sparse) {
    SplitMix64 rng(seed);
    Vector w(m);
    for (Eigen::Index i = 0; i < m; ++i) w[i] = -std::log(1.0 - rng.uniform());
    if (sparse)
        for (Eigen::Index i = 0; i < m; ++i)
            if (rng.uniform() < 0.3) w[i] = 0.0;
    if (w.sum() == 0.0) w[0] = 1.0;
    return w / w.sum();
}

}  // namespace npgmo::testing
