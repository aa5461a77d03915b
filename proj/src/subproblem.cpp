#include "npgmo/subproblem.hpp"

#include "npgmo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <numeric>
#include <vector>

namespace npgmo {
namespace {

constexpr int kPowerIterations = 30;
constexpr double kStepSafety = 1.1;
constexpr double kGapFloorUlps = 64.0;
constexpr double kResidualFloorUlps = 16.0;
constexpr int kPolishAfterStable = 3;
constexpr double kAscentSlope = 1e-4;
// Approximate ascent test used once value differences drop to rounding level:
// the directional derivative at the trial point must stay above -0.8 of the
// initial one (Hager-Zhang approximate Wolfe condition, maximization form).
constexpr double kApproxAscentSlope = 0.8;
constexpr int kMaxDualHalvings = 60;
// Simplex weights carry an absolute rounding error of ~eps, which moves the
// model values by eps times the dual curvature.
constexpr double kLambdaFloorUlps = 4.0;
// Recent dual iterates kept for the primal segment search.
constexpr std::size_t kPolishHistory = 8;
constexpr int kGoldenIters = 90;
constexpr int kNewtonHalvings = 4;
constexpr int kNewtonQpIters = 300;
constexpr std::size_t kExactQpMaxObjectives = 8;

std::span<const double> cspan(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}
std::span<double> mspan(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> cspan(const Matrix& a) {
    return {a.data(), static_cast<std::size_t>(a.size())};
}

void weighted_sum(const SimplexWeights& lambda, const SmoothEval& eval, Matrix& hessian,
                  Vector& gradient) {
    const auto& k = kernels::active();
    const Eigen::Index n = eval.gradients.front().size();
    hessian.setZero(n, n);
    gradient.setZero(n);
    std::span<double> hs{hessian.data(), static_cast<std::size_t>(hessian.size())};
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        const double w = lambda[i];
        if (w == 0.0) continue;
        k.axpy(w, cspan(eval.hessians[i]), hs);
        k.axpy(w, cspan(eval.gradients[i]), mspan(gradient));
    }
}

/// Largest eigenvalue estimate of a symmetric PSD matrix by power iteration.
double power_max_eigenvalue(const Matrix& h) {
    const auto& k = kernels::active();
    const auto n = static_cast<std::size_t>(h.rows());
    Vector v(h.rows());
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(j));
    v.normalize();
    Vector hv(h.rows());
    double estimate = 0.0;
    for (int it = 0; it < kPowerIterations; ++it) {
        k.gemv(cspan(h), n, cspan(v), mspan(hv));
        estimate = std::max(estimate, k.dot(cspan(v), cspan(hv)));
        const double norm = hv.norm();
        if (!(norm > 0.0)) break;
        v = hv / norm;
    }
    return estimate;
}

/// Active pattern of a prox output u: -1 at lower bound / zero, +1 upper bound / positive...
/// encoded per kind so that equal patterns imply the same reduced linear system.
std::vector<signed char> active_pattern(const NonsmoothTerm& term, const Vector& u) {
    std::vector<signed char> p(static_cast<std::size_t>(u.size()), 0);
    if (const auto* l1 = term.as_l1()) {
        (void)l1;
        for (Eigen::Index j = 0; j < u.size(); ++j)
            p[static_cast<std::size_t>(j)] = u[j] > 0.0 ? 1 : (u[j] < 0.0 ? -1 : 0);
    } else if (const auto* box = term.as_box()) {
        for (Eigen::Index j = 0; j < u.size(); ++j) {
            if (u[j] <= box->lo[j]) p[static_cast<std::size_t>(j)] = -1;
            else if (u[j] >= box->hi[j]) p[static_cast<std::size_t>(j)] = 1;
        }
    }
    return p;
}

/// Exact minimizer of the inner problem restricted to an active pattern:
/// coordinates fixed by the pattern are pinned, the rest solve a reduced
/// symmetric positive-definite system.
std::optional<Vector> polish(const Matrix& h, const Vector& grad, const NonsmoothTerm& term,
                             const Vector& x, const std::vector<signed char>& pattern) {
    const Eigen::Index n = x.size();
    Vector d = Vector::Zero(n);
    Vector rhs_shift = grad;  // gradient of the linear part on the free coordinates
    std::vector<Eigen::Index> free;
    std::vector<Eigen::Index> pinned;
    if (const auto* l1 = term.as_l1()) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const signed char s = pattern[static_cast<std::size_t>(j)];
            if (s == 0) {
                d[j] = -x[j];
                pinned.push_back(j);
            } else {
                rhs_shift[j] += l1->rho * s;
                free.push_back(j);
            }
        }
    } else if (const auto* box = term.as_box()) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const signed char s = pattern[static_cast<std::size_t>(j)];
            if (s < 0) { d[j] = box->lo[j] - x[j]; pinned.push_back(j); }
            else if (s > 0) { d[j] = box->hi[j] - x[j]; pinned.push_back(j); }
            else free.push_back(j);
        }
    } else {
        return std::nullopt;
    }
    if (free.empty()) return d;

    const auto nf = static_cast<Eigen::Index>(free.size());
    Matrix hff(nf, nf);
    Vector rhs(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
        double acc = -rhs_shift[free[static_cast<std::size_t>(a)]];
        for (Eigen::Index p : pinned) acc -= h(free[static_cast<std::size_t>(a)], p) * d[p];
        rhs[a] = acc;
        for (Eigen::Index b = 0; b < nf; ++b)
            hff(a, b) = h(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
    }
    Eigen::LLT<Matrix> llt(hff);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Vector df = llt.solve(rhs);
    df += llt.solve(rhs - hff * df);
    for (Eigen::Index a = 0; a < nf; ++a) d[free[static_cast<std::size_t>(a)]] = df[a];
    return d;
}

/// Moves d by a few ulps so that x + d lies in the box in floating point, not
/// only up to rounding.
void repair_box(const NonsmoothTerm& term, const Vector& x, Vector& d) {
    const auto* box = term.as_box();
    if (box == nullptr) return;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        if (x[j] + d[j] > box->hi[j]) d[j] = box->hi[j] - x[j];
        if (x[j] + d[j] < box->lo[j]) d[j] = box->lo[j] - x[j];
        for (int k = 0; k < 8 && x[j] + d[j] > box->hi[j]; ++k) d[j] = std::nextafter(d[j], -kInf);
        for (int k = 0; k < 8 && x[j] + d[j] < box->lo[j]; ++k) d[j] = std::nextafter(d[j], kInf);
    }
}

struct ProxGradStep {
    Vector d_next;  // T(d) = prox(x + d - step*(grad + H d)) - x
    Vector u;       // x + T(d)
};

}  // namespace

// ---------------------------------------------------------------------------

SimplexWeights SimplexWeights::uniform(std::size_t m) {
    if (m == 0) throw InputError("simplex dimension must be positive");
    return SimplexWeights(Vector::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m)));
}

SimplexWeights SimplexWeights::from_feasible(Vector lambda) {
    if (lambda.size() == 0 || (lambda.array() < 0.0).any() || std::abs(lambda.sum() - 1.0) > 1e-12)
        throw InputError("weights are not in the unit simplex");
    return SimplexWeights(std::move(lambda));
}

SimplexWeights project_simplex(const Vector& v) {
    if (v.size() == 0 || !v.allFinite()) throw InputError("project_simplex needs a finite nonempty vector");
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double prefix = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        prefix += sorted[j];
        const double candidate = (prefix - 1.0) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) tau = candidate;
    }
    Vector w = (v.array() - tau).max(0.0).matrix();
    const double total = w.sum();
    if (total > 0.0) w /= total;
    else w = Vector::Constant(v.size(), 1.0 / static_cast<double>(v.size()));
    return SimplexWeights(std::move(w));
}

// ---------------------------------------------------------------------------

InnerResult inner_minimize(const SimplexWeights& lambda, const SmoothEval& eval,
                           const NonsmoothTerm& nonsmooth, const Vector& x,
                           const InnerOptions& options, const Vector* warm_start) {
    if (lambda.size() != eval.gradients.size()) throw InputError("weights and objectives differ in count");
    Matrix h;
    Vector g;
    weighted_sum(lambda, eval, h, g);
    return inner_minimize_weighted(h, g, nonsmooth, x, options, warm_start);
}

InnerResult inner_minimize_weighted(const Matrix& hessian, const Vector& gradient,
                                    const NonsmoothTerm& nonsmooth, const Vector& x,
                                    const InnerOptions& options, const Vector* warm_start) {
    const Eigen::Index n = x.size();
    Eigen::LLT<Matrix> llt(hessian);
    if (llt.info() != Eigen::Success)
        throw SingularMetricError("weighted Hessian is not positive definite");

    if (nonsmooth.kind() == NonsmoothTerm::Kind::Zero) {
        InnerResult out;
        out.d = llt.solve(-gradient);
        out.d += llt.solve(-gradient - hessian * out.d);  // one refinement step
        out.iterations = 1;
        return out;
    }

    const auto& k = kernels::active();
    const auto nn = static_cast<std::size_t>(n);
    const double lmax = kStepSafety * power_max_eigenvalue(hessian);
    if (!(lmax > 0.0) || !std::isfinite(lmax))
        throw SingularMetricError("could not estimate the largest Hessian eigenvalue");
    const double step = 1.0 / lmax;

    Vector hv(n);
    Vector v(n);
    // T(z) for any z: one proximal-gradient step, expressed as a displacement from x.
    auto prox_step = [&](const Vector& z, ProxGradStep& out) {
        k.gemv(cspan(hessian), nn, cspan(z), mspan(hv));
        v = x + z;
        k.axpy(-step, cspan(gradient), mspan(v));
        k.axpy(-step, cspan(hv), mspan(v));
        out.u.resize(n);
        nonsmooth.prox_into(cspan(v), step, mspan(out.u));
        out.d_next = out.u - x;
    };

    Vector d = warm_start != nullptr && warm_start->size() == n ? *warm_start : Vector::Zero(n);
    Vector y = d;
    double momentum = 1.0;
    ProxGradStep at_d;
    ProxGradStep at_y;
    std::vector<signed char> last_pattern;
    int stable = 0;
    double residual = kInf;

    for (std::size_t it = 0; it < options.max_iters; ++it) {
        prox_step(d, at_d);
        residual = (at_d.d_next - d).norm();
        const double tol = std::max(options.tol, kResidualFloorUlps * kMachineEps * (x.norm() + d.norm() + 1.0));
        if (residual <= tol) {
            repair_box(nonsmooth, x, d);
            return {d, residual, it};
        }

        auto pattern = active_pattern(nonsmooth, at_d.u);
        stable = (pattern == last_pattern) ? stable + 1 : 0;
        if (stable >= kPolishAfterStable || (it == 0 && warm_start != nullptr)) {
            if (auto candidate = polish(hessian, gradient, nonsmooth, x, pattern)) {
                ProxGradStep at_c;
                prox_step(*candidate, at_c);
                const double rc = (at_c.d_next - *candidate).norm();
                if (rc <= tol) {
                    repair_box(nonsmooth, x, *candidate);
                    return {*candidate, rc, it + 1};
                }
                if (rc < residual) {
                    d = *candidate;
                    y = d;
                    momentum = 1.0;
                    stable = 0;
                    last_pattern = std::move(pattern);
                    continue;
                }
            }
            stable = 0;
        }
        last_pattern = std::move(pattern);

        // Accelerated step from the extrapolated point, with gradient-based restart.
        prox_step(y, at_y);
        const Vector& d_new = at_y.d_next;
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        if ((y - d_new).dot(d_new - d) > 0.0) {
            momentum = 1.0;
            y = d_new;
        } else {
            y = d_new + ((momentum - 1.0) / next_momentum) * (d_new - d);
            momentum = next_momentum;
        }
        d = d_new;
    }
    throw NonconvergenceError("inner proximal-gradient iteration cap reached", residual);
}

// ---------------------------------------------------------------------------

Vector model_values(const Vector& d, const SmoothEval& eval, const NonsmoothTerm& nonsmooth,
                    const Vector& x) {
    const auto& k = kernels::active();
    const auto m = eval.gradients.size();
    const auto n = static_cast<std::size_t>(d.size());
    const double g_shift = nonsmooth.value(x + d) - nonsmooth.value(x);
    Vector hd(d.size());
    Vector psi(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        k.gemv(cspan(eval.hessians[i]), n, cspan(d), mspan(hd));
        psi[static_cast<Eigen::Index>(i)] =
            k.dot(cspan(eval.gradients[i]), cspan(d)) + g_shift + 0.5 * k.dot(cspan(d), cspan(hd));
    }
    return psi;
}

double duality_gap(const SimplexWeights& lambda, const Vector& model_vals) {
    if (model_vals.size() == 1) return 0.0;
    return model_vals.maxCoeff() - lambda.values().dot(model_vals);
}

double gap_rounding_floor(double model_scale) noexcept {
    return kGapFloorUlps * kMachineEps * model_scale;
}

namespace {

struct DualPoint {
    SimplexWeights lambda = SimplexWeights::uniform(1);
    Vector d;
    Vector psi;
    double phi = 0.0;
    double gap = kInf;
    double rounding_floor = 0.0;
    double target = 0.0;
};

double model_scale(const Vector& d, const SmoothEval& eval, const NonsmoothTerm& nonsmooth,
                   const Vector& x) {
    const double gx = nonsmooth.value(x);
    const double gxd = nonsmooth.value(x + d);
    double scale = 0.0;
    for (std::size_t i = 0; i < eval.gradients.size(); ++i) {
        const double lin = std::abs(eval.gradients[i].dot(d));
        const double quad = 0.5 * std::abs(d.dot(eval.hessians[i] * d));
        scale = std::max(scale, lin + quad + std::abs(gx) + std::abs(gxd));
    }
    return scale;
}

// Maximizes psi^T (mu - l0) - 1/2 (mu - l0)^T M (mu - l0) over the simplex by
// solving the stationarity system on every face and keeping the best feasible
// point. M may be singular, so each face uses a rank-revealing solve.
std::optional<Vector> simplex_qp_exact(const Vector& psi, const Matrix& mm, const Vector& l0) {
    const auto m = psi.size();
    const Vector rhs_full = psi + mm * l0;
    auto model = [&](const Vector& mu) {
        const Vector dl = mu - l0;
        return psi.dot(dl) - 0.5 * dl.dot(mm * dl);
    };
    std::optional<Vector> best;
    double best_val = -kInf;
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        std::vector<Eigen::Index> face;
        for (Eigen::Index i = 0; i < m; ++i)
            if (mask & (1u << i)) face.push_back(i);
        const auto k = static_cast<Eigen::Index>(face.size());
        Matrix kkt = Matrix::Zero(k + 1, k + 1);
        Vector rhs(k + 1);
        for (Eigen::Index a = 0; a < k; ++a) {
            for (Eigen::Index b = 0; b < k; ++b) kkt(a, b) = mm(face[a], face[b]);
            kkt(a, k) = kkt(k, a) = 1.0;
            rhs[a] = rhs_full[face[a]];
        }
        rhs[k] = 1.0;
        const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        Vector mu = Vector::Zero(m);
        bool feasible = sol.allFinite();
        for (Eigen::Index a = 0; a < k && feasible; ++a) {
            if (sol[a] < -1e-12) feasible = false;
            mu[face[a]] = std::max(0.0, sol[a]);
        }
        if (!feasible || !(mu.sum() > 0.0)) continue;
        mu /= mu.sum();
        const double val = model(mu);
        if (val > best_val) {
            best_val = val;
            best = std::move(mu);
        }
    }
    return best;
}

}  // namespace

DirectionResult solve_direction(const SmoothEval& eval, const NonsmoothTerm& nonsmooth,
                                const Vector& x, const DirectionOptions& options) {
    const std::size_t m = eval.gradients.size();
    if (m == 0) throw InputError("solve_direction needs at least one objective");
    if (!(options.tol_gap > 0.0)) throw InputError("tol_gap must be positive");
    // An error delta in d moves the model values apart by about
    // |grad f_i - grad f_j| |delta|, so the default inner tolerance is taken in
    // gap units when the gradients are spread out.
    double spread = 0.0;
    {
        Vector mean = Vector::Zero(static_cast<Eigen::Index>(x.size()));
        for (const auto& gi : eval.gradients) mean += gi;
        mean /= static_cast<double>(m);
        for (const auto& gi : eval.gradients) spread = std::max(spread, 2.0 * (gi - mean).norm());
    }
    InnerOptions inner{options.inner_tol > 0.0 ? options.inner_tol : options.tol_gap / 10.0 / std::max(1.0, spread),
                       options.max_inner_iters};

    std::size_t inner_total = 0;
    Matrix h;
    Vector g;
    auto evaluate = [&](SimplexWeights lambda, const Vector* warm) {
        weighted_sum(lambda, eval, h, g);
        InnerResult r = inner_minimize_weighted(h, g, nonsmooth, x, inner, warm);
        inner_total += r.iterations;
        DualPoint p;
        p.lambda = std::move(lambda);
        p.d = std::move(r.d);
        p.psi = model_values(p.d, eval, nonsmooth, x);
        p.phi = p.lambda.values().dot(p.psi);
        p.gap = std::max(0.0, duality_gap(p.lambda, p.psi));
        p.rounding_floor = gap_rounding_floor(model_scale(p.d, eval, nonsmooth, x));
        p.target = std::max(options.tol_gap, p.rounding_floor);
        return p;
    };
    auto finish = [&](const DualPoint& p, std::size_t dual_iters) {
        DirectionResult out;
        out.d = p.d;
        out.theta = p.psi.maxCoeff();
        out.lambda = p.lambda;
        out.gap = p.gap;
        out.gap_target = p.target;
        out.dual_value = p.phi;
        out.model_values = p.psi;
        out.inner_iters = inner_total;
        out.dual_iters = dual_iters;
        return out;
    };

    DualPoint cur = evaluate(SimplexWeights::uniform(m), nullptr);
    if (m == 1) return finish(cur, 0);

    std::deque<DualPoint> history;
    auto remember = [&](const DualPoint& p) {
        history.push_back(p);
        if (history.size() > kPolishHistory) history.pop_front();
    };
    remember(cur);

    double curvature = 0.0;  // secant estimate |d psi| / |d lambda| of the last accepted step
    // For directions of norm >= descent_norm the gap must also stay under half
    // the dual value, so that theta <= phi / 2 certifies descent when phi is tiny.
    auto relative_target = [&](const DualPoint& p) {
        return p.d.norm() >= options.descent_norm ? std::min(options.tol_gap, -0.5 * p.phi) : options.tol_gap;
    };
    // The weight-resolution floor is waived while a long direction still fails
    // to certify descent; the weights may yet reach an exact face of the simplex.
    auto target_of = [&](const DualPoint& p, bool final = false) {
        const bool undecided = !final && p.d.norm() >= options.descent_norm && !(p.psi.maxCoeff() < 0.0);
        const double lambda_floor = undecided ? 0.0 : kLambdaFloorUlps * kMachineEps * curvature;
        return std::max({relative_target(p), p.rounding_floor, lambda_floor});
    };

    // Local linear model of d(lambda) with the active pattern of d frozen:
    // free coordinates, the weighted Hessian on them, and the model gradients.
    struct Linearization {
        std::vector<Eigen::Index> free;
        Eigen::LLT<Matrix> llt;
        Matrix jac;
    };
    auto linearize = [&](const DualPoint& p) -> std::optional<Linearization> {
        const auto n = x.size();
        Linearization lin;
        Vector shift = Vector::Zero(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double u = x[j] + p.d[j];
            if (const auto* l1 = nonsmooth.as_l1()) {
                if (u == 0.0) continue;
                shift[j] = u > 0.0 ? l1->rho : -l1->rho;
            } else if (const auto* box = nonsmooth.as_box()) {
                if (!(u > box->lo[j] && u < box->hi[j])) continue;
            }
            lin.free.push_back(j);
        }
        if (lin.free.empty()) return std::nullopt;
        const auto nf = static_cast<Eigen::Index>(lin.free.size());
        weighted_sum(p.lambda, eval, h, g);
        Matrix hff(nf, nf);
        for (Eigen::Index a = 0; a < nf; ++a)
            for (Eigen::Index b = 0; b < nf; ++b) hff(a, b) = h(lin.free[a], lin.free[b]);
        lin.llt.compute(hff);
        if (lin.llt.info() != Eigen::Success) return std::nullopt;
        lin.jac.resize(nf, static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            const Vector col = eval.gradients[i] + eval.hessians[i] * p.d + shift;
            for (Eigen::Index a = 0; a < nf; ++a) lin.jac(a, static_cast<Eigen::Index>(i)) = col[lin.free[a]];
        }
        return lin;
    };

    // Primal Newton step on the optimality system of min max psi restricted to
    // an active set S: stationarity H dd + J (lambda + dw) = 0, equal
    // linearized values psi_S + J_S^T dd = t, sum dw = 0. Written in the
    // corrections dw, the small differences between model values keep their
    // relative precision, which the weights alone lose at rounding resolution.
    auto kkt_candidate = [&](const DualPoint& p) -> std::optional<Vector> {
        const auto lin = linearize(p);
        if (!lin) return std::nullopt;
        const auto mi = static_cast<Eigen::Index>(m);
        const Vector& lam = p.lambda.values();
        const Vector r = lin->jac * lam;
        std::vector<Eigen::Index> act;
        const double theta = p.psi.maxCoeff();
        for (Eigen::Index i = 0; i < mi; ++i)
            if (lam[i] > 0.0 || p.psi[i] >= theta - p.gap) act.push_back(i);
        while (!act.empty()) {
            const auto k = static_cast<Eigen::Index>(act.size());
            Vector dw = -lam;
            Matrix js(lin->jac.rows(), k);
            for (Eigen::Index a = 0; a < k; ++a) {
                js.col(a) = lin->jac.col(act[a]);
                dw[act[a]] = 0.0;
            }
            const Vector base = lin->llt.solve(r + lin->jac * dw);
            const Matrix hinv_js = lin->llt.solve(js);
            Matrix kkt = Matrix::Zero(k + 1, k + 1);
            kkt.topLeftCorner(k, k) = js.transpose() * hinv_js;
            kkt.block(0, k, k, 1).setOnes();
            kkt.block(k, 0, 1, k).setOnes();
            Vector rhs(k + 1);
            for (Eigen::Index a = 0; a < k; ++a) rhs[a] = p.psi[act[a]] - js.col(a).dot(base);
            rhs[k] = -dw.sum();
            const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
            if (!sol.allFinite()) return std::nullopt;
            Eigen::Index worst = 0;
            for (Eigen::Index a = 1; a < k; ++a)
                if (lam[act[a]] + sol[a] < lam[act[worst]] + sol[worst]) worst = a;
            if (lam[act[worst]] + sol[worst] < 0.0) {
                act.erase(act.begin() + worst);
                continue;
            }
            const Vector dd = -(base + hinv_js * sol.head(k));
            Vector d = p.d;
            for (Eigen::Index a = 0; a < dd.size(); ++a) d[lin->free[a]] += dd[a];
            repair_box(nonsmooth, x, d);
            return d;
        }
        return std::nullopt;
    };

    // Near a critical point the weights cannot be resolved finely enough to
    // make max psi fall below phi. The primal side still can: psi is convex in
    // d, so minimize max psi along segments between recent inner solutions.
    // The gap then becomes max psi(d) - phi(lambda), which bounds the
    // same-point gap from above.
    auto segment_search = [&](DualPoint p) {
        if (p.gap <= relative_target(p)) return p;
        auto theta_at = [&](const Vector& d) { return model_values(d, eval, nonsmooth, x).maxCoeff(); };
        Vector best_d = p.d;
        double best_theta = p.psi.maxCoeff();
        if (auto cand = kkt_candidate(p)) {
            const double th = theta_at(*cand);
            if (th < best_theta) {
                best_theta = th;
                best_d = std::move(*cand);
            }
        }
        const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
        for (const auto& q : history) {
            const Vector dir = q.d - p.d;
            if (dir.lpNorm<Eigen::Infinity>() == 0.0) continue;
            double a = 0.0, b = 1.0;
            double c = b - golden * (b - a), e = a + golden * (b - a);
            double fc = theta_at(p.d + c * dir), fe = theta_at(p.d + e * dir);
            for (int i = 0; i < kGoldenIters && c < e; ++i) {
                if (fc <= fe) {
                    b = e; e = c; fe = fc;
                    c = b - golden * (b - a);
                    fc = theta_at(p.d + c * dir);
                } else {
                    a = c; c = e; fc = fe;
                    e = a + golden * (b - a);
                    fe = theta_at(p.d + e * dir);
                }
            }
            const double beta = fc <= fe ? c : e;
            const Vector cand = p.d + beta * dir;
            const double th = theta_at(cand);
            if (th < best_theta) {
                best_theta = th;
                best_d = cand;
            }
        }
        if (best_theta < p.psi.maxCoeff()) {
            p.d = std::move(best_d);
            p.psi = model_values(p.d, eval, nonsmooth, x);
            p.gap = std::max(0.0, p.psi.maxCoeff() - p.phi);
        }
        return p;
    };

    // Projected Newton target on the dual. With the active pattern of d(lambda)
    // frozen, d responds to lambda linearly on the free coordinates, which gives
    // the dual Hessian -J^T H_FF^{-1} J. The quadratic model is then maximized
    // over the simplex by accelerated projected gradient.
    auto newton_target = [&](const DualPoint& p) -> std::optional<Vector> {
        const auto lin = linearize(p);
        if (!lin) return std::nullopt;
        const Matrix mm = lin->jac.transpose() * lin->llt.solve(lin->jac);
        const double lip = mm.trace();
        if (!(lip > 0.0) || !std::isfinite(lip)) return std::nullopt;
        const Vector& l0 = p.lambda.values();
        if (m <= kExactQpMaxObjectives) return simplex_qp_exact(p.psi, mm, l0);
        Vector lam = l0, y = l0;
        double momentum = 1.0;
        for (int i = 0; i < kNewtonQpIters; ++i) {
            const Vector grad = p.psi - mm * (y - l0);
            Vector next = project_simplex(y + grad / lip).values();
            const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            y = next + ((momentum - 1.0) / next_momentum) * (next - lam);
            momentum = next_momentum;
            lam = std::move(next);
        }
        return lam;
    };

    DualPoint best = cur;
    double s = 1.0;
    Vector prev_lambda;
    Vector prev_grad;
    // Evaluates a trial weight vector and moves to it on (approximate) ascent.
    auto try_step = [&](SimplexWeights trial) {
        const Vector step = trial.values() - cur.lambda.values();
        if (step.lpNorm<Eigen::Infinity>() == 0.0) return false;
        DualPoint next = evaluate(std::move(trial), &cur.d);
        remember(next);
        const double slope0 = cur.psi.dot(step);
        const bool ascent = next.phi >= cur.phi + kAscentSlope * slope0;
        const bool approx_ascent =
            next.phi >= cur.phi - target_of(cur) && next.psi.dot(step) >= -kApproxAscentSlope * slope0;
        if (!ascent && !approx_ascent) return false;
        prev_lambda = cur.lambda.values();
        prev_grad = cur.psi;
        const Vector dpsi = next.psi - cur.psi;
        curvature = (dpsi.array() - dpsi.mean()).matrix().norm() / step.norm();
        cur = std::move(next);
        return true;
    };

    std::size_t it = 0;
    for (; it < options.max_dual_iters; ++it) {
        if (cur.gap <= target_of(cur)) {
            cur.target = target_of(cur);
            return finish(segment_search(std::move(cur)), it);
        }

        bool accepted = false;
        if (const auto nt = newton_target(cur)) {
            const Vector dir = *nt - cur.lambda.values();
            double frac = 1.0;
            for (int k = 0; k <= kNewtonHalvings && !accepted; ++k, frac *= 0.5)
                accepted = try_step(project_simplex(cur.lambda.values() + frac * dir));
        }

        if (!accepted) {
            // Spectral (Barzilai-Borwein) step once curvature information exists.
            if (prev_lambda.size() == static_cast<Eigen::Index>(m)) {
                const Vector dl = cur.lambda.values() - prev_lambda;
                const Vector dg = cur.psi - prev_grad;
                const double curv = -dl.dot(dg);
                s = curv > 0.0 ? dl.squaredNorm() / curv : 2.0 * s;
            }
            s = std::clamp(s, 1e-30, 1e30);
            for (int halving = 0; halving <= kMaxDualHalvings && !accepted; ++halving, s *= 0.5) {
                SimplexWeights trial = project_simplex(cur.lambda.values() + s * cur.psi);
                if ((trial.values() - cur.lambda.values()).lpNorm<Eigen::Infinity>() == 0.0) break;
                accepted = try_step(std::move(trial));
            }
        }
        if (cur.gap < best.gap) best = cur;
        if (!accepted) break;
    }
    best.target = target_of(best, true);
    best = segment_search(std::move(best));
    if (best.gap <= best.target) return finish(best, it);
    // d = 0 has all model values 0; at a degenerate critical point it may be
    // the only primal point the gap can certify.
    if (-best.phi <= best.target && best.psi.maxCoeff() > 0.0) {
        best.d.setZero();
        best.psi.setZero();
        best.gap = std::max(0.0, -best.phi);
        return finish(best, it);
    }
    throw DirectionNonconvergence(finish(best, it));
}

DirectionResult solve_direction(const ProblemInstance& problem, const Vector& x,
                                const DirectionOptions& options) {
    return solve_direction(eval_smooth(problem, x), problem.shared_nonsmooth(), x, options);
}

}  // namespace npgmo
