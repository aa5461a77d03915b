#include "npgmo/zoo.hpp"

#include <cmath>
#include <numbers>

namespace npgmo {

double SplitMix64::normal() noexcept {
    // 1 - u keeps the logarithm argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector random_normal_vector(SplitMix64& rng, Eigen::Index n, double scale) {
    Vector v(n);
    for (Eigen::Index j = 0; j < n; ++j) v[j] = scale * rng.normal();
    return v;
}

Matrix random_orthogonal(SplitMix64& rng, Eigen::Index n) {
    Matrix g(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r) g(r, c) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

std::string to_string(Family f) {
    switch (f) {
        case Family::Quadratic: return "quadratic";
        case Family::LogSumExpReg: return "logsumexp";
        case Family::QuadraticL1: return "quadratic_l1";
        case Family::QuadraticBox: return "quadratic_box";
    }
    return "unknown";
}

std::optional<Family> parse_family(const std::string& s) {
    if (s == "quadratic") return Family::Quadratic;
    if (s == "logsumexp") return Family::LogSumExpReg;
    if (s == "quadratic_l1") return Family::QuadraticL1;
    if (s == "quadratic_box") return Family::QuadraticBox;
    return std::nullopt;
}

void InstanceSpec::validate() const {
    if (n < 1) throw ConfigError("instance.n", "must be >= 1");
    if (m < 1) throw ConfigError("instance.m", "must be >= 1");
    if (!(cond >= 1.0) || !std::isfinite(cond)) throw ConfigError("instance.cond", "must be a finite value >= 1");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("instance.mu", "must be a finite value > 0");
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("instance.rho", "must be a finite value >= 0");
    if (!(box_lo <= box_hi)) throw ConfigError("instance.box_hi", "must be >= box_lo");
    if (shifts) {
        if (shifts->size() != m) throw ConfigError("instance.shifts", "needs one vector per objective");
        for (const auto& b : *shifts)
            if (static_cast<std::size_t>(b.size()) != n || !b.allFinite())
                throw ConfigError("instance.shifts", "each shift needs n finite entries");
        if (family == Family::LogSumExpReg)
            throw ConfigError("instance.shifts", "only quadratic families take shifts");
    }
}

ProblemInstance gen_quadratic(const InstanceSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.n);
    SplitMix64 rng(spec.seed);
    ProblemInstance p;
    p.n = spec.n;
    p.m = spec.m;
    p.mu = spec.mu;
    double lmax = spec.mu;
    for (std::size_t i = 0; i < spec.m; ++i) {
        Vector spectrum(n);
        for (Eigen::Index j = 0; j < n; ++j) spectrum[j] = spec.mu * std::pow(spec.cond, rng.uniform());
        Matrix a;
        if (spec.cond == 1.0) {
            a = spec.mu * Matrix::Identity(n, n);
        } else {
            const Matrix q = random_orthogonal(rng, n);
            a = q * spectrum.asDiagonal() * q.transpose();
            a = (0.5 * (a + a.transpose())).eval();
            lmax = std::max(lmax, spectrum.maxCoeff());
        }
        Vector b;
        if (spec.shifts) {
            b = (*spec.shifts)[i];
        } else {
            const Vector center = random_normal_vector(rng, n);
            b = a * center;
        }
        p.smooth.push_back(std::make_shared<QuadraticObjective>(std::move(a), std::move(b)));
        p.nonsmooth.emplace_back(ZeroTerm{});
    }
    p.lip_grad = lmax;
    p.lip_hess = 0.0;

    switch (spec.family) {
        case Family::QuadraticL1: return attach_nonsmooth(std::move(p), NonsmoothTerm(ScaledL1{spec.rho}));
        case Family::QuadraticBox:
            return attach_nonsmooth(std::move(p), NonsmoothTerm(BoxIndicator{Vector::Constant(n, spec.box_lo),
                                                                             Vector::Constant(n, spec.box_hi)}));
        default: return p;
    }
}

ProblemInstance gen_logsumexp_reg(const InstanceSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto rows = static_cast<Eigen::Index>(spec.rows == 0 ? spec.n : spec.rows);
    SplitMix64 rng(spec.seed);
    ProblemInstance p;
    p.n = spec.n;
    p.m = spec.m;
    p.mu = spec.mu;
    double max_row_norm = 0.0;
    const double row_scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < spec.m; ++i) {
        Matrix a(rows, n);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < n; ++c) a(r, c) = row_scale * rng.normal();
        Vector offsets = random_normal_vector(rng, rows);
        Vector center = random_normal_vector(rng, n);
        max_row_norm = std::max(max_row_norm, a.rowwise().norm().maxCoeff());
        p.smooth.push_back(std::make_shared<LogSumExpObjective>(std::move(a), std::move(offsets), spec.mu,
                                                                std::move(center)));
        p.nonsmooth.emplace_back(ZeroTerm{});
    }
    // The log-sum-exp Hessian is bounded by max |a_j|^2 and its third derivative
    // by 2 max |a_j|^3 along unit directions.
    p.lip_grad = max_row_norm * max_row_norm + spec.mu;
    p.lip_hess = 2.0 * max_row_norm * max_row_norm * max_row_norm;
    return p;
}

ProblemInstance attach_nonsmooth(ProblemInstance instance, const NonsmoothTerm& term) {
    if (const auto* box = term.as_box(); box && static_cast<std::size_t>(box->lo.size()) != instance.n)
        throw InputError("box bounds must have dimension n");
    instance.nonsmooth.assign(instance.m, term);
    instance.reference_solution.reset();
    return instance;
}

ProblemInstance attach_nonsmooth(ProblemInstance instance, const std::vector<NonsmoothTerm>& terms) {
    if (terms.size() != instance.m) throw InputError("need one nonsmooth term per objective");
    for (const auto& t : terms)
        if (!(t == terms.front())) throw InputError("nonsmooth terms must be identical across objectives");
    return attach_nonsmooth(std::move(instance), terms.front());
}

ProblemInstance generate(const InstanceSpec& spec) {
    return spec.family == Family::LogSumExpReg ? gen_logsumexp_reg(spec) : gen_quadratic(spec);
}

}  // namespace npgmo
