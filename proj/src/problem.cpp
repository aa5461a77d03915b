#include "npgmo/problem.hpp"

#include "npgmo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace npgmo {
namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

// ---------------------------------------------------------------------------
// QuadraticObjective

QuadraticObjective::QuadraticObjective(Matrix a, Vector b, double c)
    : a_(std::move(a)), b_(std::move(b)), c_(c) {
    if (a_.rows() != a_.cols() || a_.rows() != b_.size())
        throw InputError("quadratic objective: matrix and vector sizes disagree");
    a_ = (0.5 * (a_ + a_.transpose())).eval();
}

SmoothValue QuadraticObjective::evaluate(const Vector& x) const {
    SmoothValue out;
    out.gradient = a_ * x - b_;
    out.value = 0.5 * x.dot(a_ * x) - b_.dot(x) + c_;
    out.hessian = a_;
    return out;
}

double QuadraticObjective::value(const Vector& x) const {
    return 0.5 * x.dot(a_ * x) - b_.dot(x) + c_;
}

// ---------------------------------------------------------------------------
// LogSumExpObjective

LogSumExpObjective::LogSumExpObjective(Matrix rows, Vector offsets, double mu, Vector center)
    : rows_(std::move(rows)), offsets_(std::move(offsets)), mu_(mu), center_(std::move(center)) {
    if (rows_.rows() != offsets_.size() || rows_.cols() != center_.size() || rows_.rows() == 0)
        throw InputError("log-sum-exp objective: inconsistent data sizes");
    if (!(mu_ >= 0.0)) throw InputError("log-sum-exp objective: mu must be nonnegative");
}

SmoothValue LogSumExpObjective::evaluate(const Vector& x) const {
    const Vector s = rows_ * x + offsets_;
    const double top = s.maxCoeff();
    Vector p = (s.array() - top).exp().matrix();
    const double total = p.sum();
    p /= total;

    const Vector shift = x - center_;
    SmoothValue out;
    out.value = top + std::log(total) + 0.5 * mu_ * shift.squaredNorm();
    out.gradient = rows_.transpose() * p + mu_ * shift;
    const Vector ap = rows_.transpose() * p;
    out.hessian = rows_.transpose() * p.asDiagonal() * rows_ - ap * ap.transpose();
    out.hessian.diagonal().array() += mu_;
    return out;
}

double LogSumExpObjective::value(const Vector& x) const {
    const Vector s = rows_ * x + offsets_;
    const double top = s.maxCoeff();
    const double total = (s.array() - top).exp().sum();
    return top + std::log(total) + 0.5 * mu_ * (x - center_).squaredNorm();
}

// ---------------------------------------------------------------------------
// NonsmoothTerm

NonsmoothTerm::NonsmoothTerm(ScaledL1 t) : term_(t) {
    if (!(t.rho >= 0.0) || !std::isfinite(t.rho)) throw InputError("l1 weight must be finite and >= 0");
}

NonsmoothTerm::NonsmoothTerm(BoxIndicator t) : term_(std::move(t)) {
    const auto& box = std::get<BoxIndicator>(term_);
    if (box.lo.size() != box.hi.size()) throw InputError("box bounds have different sizes");
    for (Eigen::Index j = 0; j < box.lo.size(); ++j)
        if (!(box.lo[j] <= box.hi[j])) throw InputError("box requires lo <= hi componentwise");
}

std::string NonsmoothTerm::describe() const {
    std::ostringstream os;
    switch (kind()) {
        case Kind::Zero: os << "zero"; break;
        case Kind::ScaledL1: os << "l1(rho=" << as_l1()->rho << ")"; break;
        case Kind::BoxIndicator: os << "box(n=" << as_box()->lo.size() << ")"; break;
    }
    return os.str();
}

double NonsmoothTerm::value(const Vector& x) const {
    switch (kind()) {
        case Kind::Zero: return 0.0;
        case Kind::ScaledL1: return as_l1()->rho * x.lpNorm<1>();
        case Kind::BoxIndicator: {
            const auto& box = *as_box();
            if (box.lo.size() != x.size()) throw InputError("box dimension mismatch");
            for (Eigen::Index j = 0; j < x.size(); ++j)
                if (x[j] < box.lo[j] || x[j] > box.hi[j]) return kInf;
            return 0.0;
        }
    }
    return 0.0;
}

void NonsmoothTerm::prox_into(std::span<const double> v, double c, std::span<double> out) const {
    if (!(c > 0.0)) throw InputError("prox scale must be positive");
    const auto& k = kernels::active();
    switch (kind()) {
        case Kind::Zero:
            if (out.data() != v.data()) std::copy(v.begin(), v.end(), out.begin());
            return;
        case Kind::ScaledL1: k.soft_threshold(v, c * as_l1()->rho, out); return;
        case Kind::BoxIndicator: {
            const auto& box = *as_box();
            if (static_cast<std::size_t>(box.lo.size()) != v.size())
                throw InputError("box dimension mismatch");
            k.clip(v, {box.lo.data(), v.size()}, {box.hi.data(), v.size()}, out);
            return;
        }
    }
}

Vector NonsmoothTerm::prox(const Vector& v, double c) const {
    Vector out(v.size());
    prox_into({v.data(), static_cast<std::size_t>(v.size())}, c,
              {out.data(), static_cast<std::size_t>(out.size())});
    return out;
}

double NonsmoothTerm::subdifferential_distance(const Vector& u, const Vector& w) const {
    switch (kind()) {
        case Kind::Zero: return w.norm();
        case Kind::ScaledL1: {
            const double rho = as_l1()->rho;
            double acc = 0.0;
            for (Eigen::Index j = 0; j < u.size(); ++j) {
                const double e = u[j] != 0.0 ? w[j] - std::copysign(rho, u[j])
                                             : std::max(0.0, std::abs(w[j]) - rho);
                acc += e * e;
            }
            return std::sqrt(acc);
        }
        case Kind::BoxIndicator: {
            const auto& box = *as_box();
            double acc = 0.0;
            for (Eigen::Index j = 0; j < u.size(); ++j) {
                double e = 0.0;
                if (u[j] < box.lo[j] || u[j] > box.hi[j]) return kInf;
                if (box.lo[j] == box.hi[j]) e = 0.0;
                else if (u[j] == box.lo[j]) e = std::max(0.0, w[j]);   // normal cone (-inf, 0]
                else if (u[j] == box.hi[j]) e = std::max(0.0, -w[j]);  // normal cone [0, +inf)
                else e = w[j];
                acc += e * e;
            }
            return std::sqrt(acc);
        }
    }
    return 0.0;
}

Vector prox_nonsmooth(const NonsmoothTerm& term, const Vector& v, double c) {
    if (!all_finite(v)) throw InputError("prox input must be finite");
    return term.prox(v, c);
}

// ---------------------------------------------------------------------------
// ProblemInstance

void ProblemInstance::validate() const {
    if (n < 1 || m < 1) throw InputError("problem needs n >= 1 and m >= 1");
    if (smooth.size() != m || nonsmooth.size() != m)
        throw InputError("problem needs exactly m smooth and m nonsmooth terms");
    for (std::size_t i = 0; i < m; ++i) {
        if (!smooth[i]) throw InputError("smooth objective " + std::to_string(i) + " is null");
        if (smooth[i]->dimension() != n)
            throw InputError("smooth objective " + std::to_string(i) + " has wrong dimension");
    }
    if (!(mu > 0.0)) throw InputError("strong convexity modulus mu must be positive");
    for (std::size_t i = 1; i < m; ++i)
        if (!(nonsmooth[i] == nonsmooth[0]))
            throw InputError("all objectives must share the same nonsmooth term");
    if (const auto* box = nonsmooth[0].as_box(); box && static_cast<std::size_t>(box->lo.size()) != n)
        throw InputError("box bounds must have dimension n");
    if (reference_solution && static_cast<std::size_t>(reference_solution->size()) != n)
        throw InputError("reference solution must have dimension n");
}

bool ProblemInstance::is_quadratic() const {
    return std::all_of(smooth.begin(), smooth.end(), [](const auto& f) {
        return dynamic_cast<const QuadraticObjective*>(f.get()) != nullptr;
    });
}

Vector eval_full(const ProblemInstance& problem, const Vector& x) {
    if (!all_finite(x)) throw InputError("eval_full: x must be finite");
    Vector out(problem.m);
    for (std::size_t i = 0; i < problem.m; ++i) {
        const double f = problem.smooth[i]->value(x);
        if (!std::isfinite(f)) throw EvaluationError(i, "non-finite value");
        out[static_cast<Eigen::Index>(i)] = f + problem.nonsmooth[i].value(x);
    }
    return out;
}

SmoothEval eval_smooth(const ProblemInstance& problem, const Vector& x) {
    if (!all_finite(x)) throw InputError("eval_smooth: x must be finite");
    SmoothEval out;
    out.values.resize(problem.m);
    out.gradients.reserve(problem.m);
    out.hessians.reserve(problem.m);
    for (std::size_t i = 0; i < problem.m; ++i) {
        SmoothValue v = problem.smooth[i]->evaluate(x);
        if (!std::isfinite(v.value)) throw EvaluationError(i, "non-finite value");
        if (v.gradient.size() != x.size() || !v.gradient.allFinite())
            throw EvaluationError(i, "gradient is non-finite or has wrong size");
        if (v.hessian.rows() != x.size() || v.hessian.cols() != x.size() || !v.hessian.allFinite())
            throw EvaluationError(i, "hessian is non-finite or has wrong size");
        out.values[static_cast<Eigen::Index>(i)] = v.value;
        out.gradients.push_back(std::move(v.gradient));
        out.hessians.push_back((0.5 * (v.hessian + v.hessian.transpose())).eval());
    }
    return out;
}

}  // namespace npgmo
