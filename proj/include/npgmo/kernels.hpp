#pragma once

// Dense vector kernels used by the direction subproblem's inner loops.
//
// Each kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2+FMA implementation. The variant is chosen once at startup from the
// CPU feature flags; setting NPGMO_KERNELS=scalar in the environment forces
// the reference path. Variants differ only in summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace npgmo::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    std::string_view name;

    double (*dot)(std::span<const double> a, std::span<const double> b);
    /// y += alpha * x
    void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
    /// y = A x for a dense n x n column-major matrix A.
    void (*gemv)(std::span<const double> a, std::size_t n, std::span<const double> x,
                 std::span<double> y);
    /// out_j = sign(v_j) * max(|v_j| - threshold, 0)
    void (*soft_threshold)(std::span<const double> v, double threshold, std::span<double> out);
    /// out_j = min(max(v_j, lo_j), hi_j)
    void (*clip)(std::span<const double> v, std::span<const double> lo,
                 std::span<const double> hi, std::span<double> out);
};

const KernelTable& scalar_table() noexcept;

/// True when the AVX2 variant is compiled in and the CPU supports AVX2 and FMA.
bool avx2_available() noexcept;

/// Table for a specific ISA; falls back to scalar when `isa` is unavailable.
const KernelTable& table(Isa isa) noexcept;

/// The process-wide dispatched table.
const KernelTable& active() noexcept;

}  // namespace npgmo::kernels
