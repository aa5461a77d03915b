#include "npgmo/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace npgmo::kernels {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void gemv(std::span<const double> a, std::size_t n, std::span<const double> x,
          std::span<double> y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double xj = x[j];
        const double* col = a.data() + j * n;
        for (std::size_t i = 0; i < n; ++i) y[i] += col[i] * xj;
    }
}

void soft_threshold(std::span<const double> v, double threshold, std::span<double> out) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v[i]) - threshold;
        out[i] = mag > 0.0 ? std::copysign(mag, v[i]) : 0.0;
    }
}

void clip(std::span<const double> v, std::span<const double> lo, std::span<const double> hi,
          std::span<double> out) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::min(std::max(v[i], lo[i]), hi[i]);
}

}  // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable t{Isa::Scalar, "scalar", &dot, &axpy, &gemv, &soft_threshold, &clip};
    return t;
}

}  // namespace npgmo::kernels
