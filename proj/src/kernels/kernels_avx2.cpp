// Compiled with -mavx2 -mfma; only reached through the dispatcher after a
// runtime CPU check.

#include "npgmo/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace npgmo::kernels {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4),
                               _mm256_loadu_pd(b.data() + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    const std::size_t n = x.size();
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y.data() + i);
        _mm256_storeu_pd(y.data() + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i), vy));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(std::span<const double> a, std::size_t n, std::span<const double> x,
          std::span<double> y) {
    std::fill(y.begin(), y.end(), 0.0);
    const std::size_t vec_end = n - n % 4;
    for (std::size_t j = 0; j < n; ++j) {
        const double* col = a.data() + j * n;
        const __m256d xj = _mm256_set1_pd(x[j]);
        std::size_t i = 0;
        for (; i < vec_end; i += 4) {
            const __m256d vy = _mm256_loadu_pd(y.data() + i);
            _mm256_storeu_pd(y.data() + i, _mm256_fmadd_pd(_mm256_loadu_pd(col + i), xj, vy));
        }
        for (; i < n; ++i) y[i] += col[i] * x[j];
    }
}

void soft_threshold(std::span<const double> v, double threshold, std::span<double> out) {
    const std::size_t n = v.size();
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    const __m256d thr = _mm256_set1_pd(threshold);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vv = _mm256_loadu_pd(v.data() + i);
        const __m256d mag = _mm256_sub_pd(_mm256_andnot_pd(sign_mask, vv), thr);
        const __m256d keep = _mm256_cmp_pd(mag, zero, _CMP_GT_OQ);
        const __m256d sign = _mm256_and_pd(_mm256_and_pd(vv, sign_mask), keep);
        _mm256_storeu_pd(out.data() + i, _mm256_or_pd(_mm256_and_pd(mag, keep), sign));
    }
    for (; i < n; ++i) {
        const double mag = std::abs(v[i]) - threshold;
        out[i] = mag > 0.0 ? std::copysign(mag, v[i]) : 0.0;
    }
}

void clip(std::span<const double> v, std::span<const double> lo, std::span<const double> hi,
          std::span<double> out) {
    const std::size_t n = v.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d c = _mm256_max_pd(_mm256_loadu_pd(v.data() + i), _mm256_loadu_pd(lo.data() + i));
        _mm256_storeu_pd(out.data() + i, _mm256_min_pd(c, _mm256_loadu_pd(hi.data() + i)));
    }
    for (; i < n; ++i) out[i] = std::min(std::max(v[i], lo[i]), hi[i]);
}

}  // namespace

const KernelTable& avx2_table() noexcept {
    static const KernelTable t{Isa::Avx2, "avx2", &dot, &axpy, &gemv, &soft_threshold, &clip};
    return t;
}

}  // namespace npgmo::kernels
