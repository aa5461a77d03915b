#include <doctest.h>

#include "npgmo/kernels.hpp"
#include "npgmo/zoo.hpp"

#include <cmath>
#include <vector>

using namespace npgmo;
namespace k = npgmo::kernels;

namespace {

std::vector<double> draw(SplitMix64& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal() * 3.0;
    return v;
}

// Summation order differs between variants; allow a few ulps of the
// magnitude sum.
double dot_slack(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
    return 4.0 * static_cast<double>(a.size() + 1) * kMachineEps * s;
}

}  // namespace

TEST_CASE("scalar kernels on small inputs") {
    const auto& s = k::scalar_table();
    std::vector<double> a{1, 2, 3}, b{4, -5, 6}, out(3);
    CHECK(s.dot(a, b) == doctest::Approx(12.0));
    s.soft_threshold(std::vector<double>{3, -0.5, -2}, 1.0, out);
    CHECK(out == std::vector<double>{2, 0, -1});
    s.clip(std::vector<double>{2, -3, 0.5}, std::vector<double>{-1, -1, -1}, std::vector<double>{1, 1, 1}, out);
    CHECK(out == std::vector<double>{1, -1, 0.5});
    std::vector<double> y{1, 1, 1};
    s.axpy(2.0, a, y);
    CHECK(y == std::vector<double>{3, 5, 7});
    // column-major [[1,3],[2,4]] times (1,1)
    std::vector<double> y2(2);
    s.gemv(std::vector<double>{1, 2, 3, 4}, 2, std::vector<double>{1, 1}, y2);
    CHECK(y2 == std::vector<double>{4, 6});
}

TEST_CASE("dispatched table is one of the two variants") {
    const auto& t = k::active();
    CHECK((t.isa == k::Isa::Scalar || t.isa == k::Isa::Avx2));
    if (!k::avx2_available()) CHECK(k::table(k::Isa::Avx2).isa == k::Isa::Scalar);
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
    const auto& s = k::scalar_table();
    const auto& v = k::table(k::Isa::Avx2);
    if (v.isa != k::Isa::Avx2) {
        MESSAGE("AVX2 unavailable on this host; comparing scalar with itself");
    }
    SplitMix64 rng(2024);
    for (std::size_t n = 0; n <= 67; ++n) {
        CAPTURE(n);
        const auto a = draw(rng, n), b = draw(rng, n);
        CHECK(std::abs(v.dot(a, b) - s.dot(a, b)) <= dot_slack(a, b));

        std::vector<double> o1(n), o2(n);
        s.soft_threshold(a, 1.3, o1);
        v.soft_threshold(a, 1.3, o2);
        CHECK(o1 == o2);

        const auto lo = draw(rng, n);
        std::vector<double> hi(n);
        for (std::size_t i = 0; i < n; ++i) hi[i] = lo[i] + std::abs(b[i]);
        s.clip(a, lo, hi, o1);
        v.clip(a, lo, hi, o2);
        CHECK(o1 == o2);

        std::vector<double> y1 = b, y2 = b;
        s.axpy(-0.7, a, y1);
        v.axpy(-0.7, a, y2);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(y1[i] - y2[i]) <= 2.0 * kMachineEps * (std::abs(0.7 * a[i]) + std::abs(b[i])));

        const auto mat = draw(rng, n * n);
        s.gemv(mat, n, a, o1);
        v.gemv(mat, n, a, o2);
        for (std::size_t i = 0; i < n; ++i) {
            double mag = 0.0;
            for (std::size_t j = 0; j < n; ++j) mag += std::abs(mat[j * n + i] * a[j]);
            CHECK(std::abs(o1[i] - o2[i]) <= 4.0 * static_cast<double>(n + 1) * kMachineEps * mag);
        }
    }
}

TEST_CASE("soft threshold handles the threshold edge and signed zero inputs") {
    for (const auto* t : {&k::scalar_table(), &k::table(k::Isa::Avx2)}) {
        std::vector<double> v{1.0, -1.0, 0.0, -0.0, 1.0000001}, out(5);
        t->soft_threshold(v, 1.0, out);
        CHECK(out[0] == 0.0);
        CHECK(out[1] == 0.0);
        CHECK(out[2] == 0.0);
        CHECK(out[3] == 0.0);
        CHECK(out[4] == doctest::Approx(1e-7).epsilon(1e-6));
    }
}
