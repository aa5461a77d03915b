#pragma once

// Seeded test-instance generators.
//
// All randomness comes from SplitMix64 (Steele, Lea & Flood constants) with
// Box-Muller normals, so an instance is a pure function of its spec on every
// platform with an IEEE-754 libm.

#include "npgmo/problem.hpp"
#include "npgmo/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace npgmo {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    /// Standard normal via Box-Muller; draws two uniforms per call.
    double normal() noexcept;

private:
    std::uint64_t state_;
};

Vector random_normal_vector(SplitMix64& rng, Eigen::Index n, double scale = 1.0);
/// Haar-like orthogonal matrix: QR of a Gaussian matrix with sign-fixed R diagonal.
Matrix random_orthogonal(SplitMix64& rng, Eigen::Index n);

enum class Family { Quadratic, LogSumExpReg, QuadraticL1, QuadraticBox };

std::string to_string(Family f);
std::optional<Family> parse_family(const std::string& s);

struct InstanceSpec {
    Family family = Family::Quadratic;
    std::size_t n = 2;
    std::size_t m = 2;
    double cond = 1.0;   // quadratic spectra are log-uniform in [mu, mu*cond]
    double mu = 1.0;
    double rho = 0.0;    // l1 weight for QuadraticL1
    std::uint64_t seed = 0;
    /// Quadratics: explicit linear terms b_i (m vectors of length n) instead of random ones.
    std::optional<std::vector<Vector>> shifts;
    /// QuadraticBox bounds, applied to every coordinate.
    double box_lo = -1.0;
    double box_hi = 1.0;
    /// Log-sum-exp: rows per objective (0 means n).
    std::size_t rows = 0;

    /// Throws ConfigError with an "instance.<field>" path.
    void validate() const;
};

/// f_i = 1/2 x'A_i x - b_i'x with A_i = Q_i D_i Q_i', g_i = 0.
ProblemInstance gen_quadratic(const InstanceSpec& spec);

/// f_i = logsumexp(A_i x + c_i) + (mu/2)|x - z_i|^2, g_i = 0.
ProblemInstance gen_logsumexp_reg(const InstanceSpec& spec);

/// Replaces every g_i by `term`; clears the reference solution.
ProblemInstance attach_nonsmooth(ProblemInstance instance, const NonsmoothTerm& term);

/// Replaces the nonsmooth terms one by one; rejects differing terms.
ProblemInstance attach_nonsmooth(ProblemInstance instance, const std::vector<NonsmoothTerm>& terms);

/// Builds the instance for any family.
ProblemInstance generate(const InstanceSpec& spec);

}  // namespace npgmo
