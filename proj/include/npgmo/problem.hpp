#pragma once

// Multiobjective composite problem: minimize F(x) = (f_1 + g_1, ..., f_m + g_m)
// with smooth f_i and one of three closed convex nonsmooth terms g_i.

#include "npgmo/types.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace npgmo {

struct SmoothValue {
    double value = 0.0;
    Vector gradient;
    Matrix hessian;
};

/// Twice-differentiable objective oracle. Implementations must be pure
/// functions of x and safe to call concurrently.
class SmoothObjective {
public:
    virtual ~SmoothObjective() = default;

    virtual std::size_t dimension() const noexcept = 0;
    virtual SmoothValue evaluate(const Vector& x) const = 0;
    /// Value only; override when it is cheaper than a full evaluation.
    virtual double value(const Vector& x) const { return evaluate(x).value; }
};

/// f(x) = 1/2 x'Ax - b'x + c
class QuadraticObjective final : public SmoothObjective {
public:
    QuadraticObjective(Matrix a, Vector b, double c = 0.0);

    std::size_t dimension() const noexcept override { return static_cast<std::size_t>(b_.size()); }
    SmoothValue evaluate(const Vector& x) const override;
    double value(const Vector& x) const override;

    const Matrix& matrix() const noexcept { return a_; }
    const Vector& linear() const noexcept { return b_; }
    double offset() const noexcept { return c_; }

private:
    Matrix a_;
    Vector b_;
    double c_;
};

/// f(x) = log sum_j exp(a_j'x + c_j) + (mu/2) |x - z|^2, evaluated with the
/// max-shift so large arguments do not overflow.
class LogSumExpObjective final : public SmoothObjective {
public:
    LogSumExpObjective(Matrix rows, Vector offsets, double mu, Vector center);

    std::size_t dimension() const noexcept override { return static_cast<std::size_t>(center_.size()); }
    SmoothValue evaluate(const Vector& x) const override;
    double value(const Vector& x) const override;

    const Matrix& rows() const noexcept { return rows_; }
    const Vector& offsets() const noexcept { return offsets_; }
    double mu() const noexcept { return mu_; }
    const Vector& center() const noexcept { return center_; }

private:
    Matrix rows_;  // p x n
    Vector offsets_;
    double mu_;
    Vector center_;
};

/// Adapter for ad-hoc oracles in tests and examples.
class FunctionObjective final : public SmoothObjective {
public:
    using Fn = std::function<SmoothValue(const Vector&)>;
    FunctionObjective(std::size_t n, Fn fn) : n_(n), fn_(std::move(fn)) {}

    std::size_t dimension() const noexcept override { return n_; }
    SmoothValue evaluate(const Vector& x) const override { return fn_(x); }

private:
    std::size_t n_;
    Fn fn_;
};

// ---------------------------------------------------------------------------
// Nonsmooth terms

struct ZeroTerm {
    bool operator==(const ZeroTerm&) const = default;
};

/// g(x) = rho * |x|_1
struct ScaledL1 {
    double rho = 0.0;
    bool operator==(const ScaledL1&) const = default;
};

/// g(x) = 0 if lo <= x <= hi componentwise, +inf otherwise.
struct BoxIndicator {
    Vector lo;
    Vector hi;
    bool operator==(const BoxIndicator& o) const {
        return lo.size() == o.lo.size() && lo == o.lo && hi == o.hi;
    }
};

class NonsmoothTerm {
public:
    enum class Kind { Zero, ScaledL1, BoxIndicator };

    NonsmoothTerm() : term_(ZeroTerm{}) {}
    NonsmoothTerm(ZeroTerm t) : term_(t) {}
    NonsmoothTerm(ScaledL1 t);
    NonsmoothTerm(BoxIndicator t);

    Kind kind() const noexcept { return static_cast<Kind>(term_.index()); }
    std::string describe() const;

    const ScaledL1* as_l1() const noexcept { return std::get_if<ScaledL1>(&term_); }
    const BoxIndicator* as_box() const noexcept { return std::get_if<BoxIndicator>(&term_); }

    /// g(x); +inf outside the box for BoxIndicator.
    double value(const Vector& x) const;

    /// argmin_u c*g(u) + 1/2 |u - v|^2. Throws InputError for c <= 0.
    Vector prox(const Vector& v, double c) const;
    /// Allocation-free prox used by inner loops; `out` may alias `v`.
    void prox_into(std::span<const double> v, double c, std::span<double> out) const;

    /// Euclidean distance from w to the subdifferential of g at u.
    /// Returns +inf when u is outside dom g.
    double subdifferential_distance(const Vector& u, const Vector& w) const;

    bool operator==(const NonsmoothTerm& o) const { return term_ == o.term_; }

private:
    std::variant<ZeroTerm, ScaledL1, BoxIndicator> term_;
};

/// Free-function form of NonsmoothTerm::prox.
Vector prox_nonsmooth(const NonsmoothTerm& term, const Vector& v, double c);

// ---------------------------------------------------------------------------

struct ProblemInstance {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::shared_ptr<const SmoothObjective>> smooth;
    std::vector<NonsmoothTerm> nonsmooth;
    double mu = 0.0;
    std::optional<double> lip_grad;
    std::optional<double> lip_hess;
    std::optional<Vector> reference_solution;

    /// Checks sizes, mu > 0 and that all nonsmooth terms coincide.
    void validate() const;
    /// The common nonsmooth term (valid after validate()).
    const NonsmoothTerm& shared_nonsmooth() const { return nonsmooth.front(); }
    /// True when every smooth part is a QuadraticObjective.
    bool is_quadratic() const;
};

struct SmoothEval {
    Vector values;                  // f_i(x)
    std::vector<Vector> gradients;  // grad f_i(x)
    std::vector<Matrix> hessians;   // symmetrized Hessians
};

/// F(x) componentwise, possibly +inf via a box indicator.
Vector eval_full(const ProblemInstance& problem, const Vector& x);

/// Bundled value/gradient/Hessian of every smooth part.
SmoothEval eval_smooth(const ProblemInstance& problem, const Vector& x);

}  // namespace npgmo
