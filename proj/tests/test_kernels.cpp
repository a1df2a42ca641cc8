#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "dfa2/kernels.hpp"
#include "test_util.hpp"

using namespace dfa2;

namespace {

// Float64 references the SIMD variants are checked against.
double dot_ref(const std::vector<float>& a, const std::vector<float>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

std::vector<float> random_vec(testutil::Rng& rng, int64_t n) {
    std::vector<float> v(static_cast<size_t>(n));
    for (auto& x : v)
        x = static_cast<float>(rng.gaussian());
    return v;
}

const int64_t kSizes[] = {1, 3, 7, 8, 9, 15, 16, 17, 31, 32, 33, 64, 67, 255, 4608};

} // namespace

TEST_CASE("scalar kernels match the float64 reference") {
    testutil::Rng rng(42);
    const auto& ops = kern::scalar_ops();
    for (int64_t n : kSizes) {
        auto a = random_vec(rng, n);
        auto b = random_vec(rng, n);

        const double ref = dot_ref(a, b);
        const double tol = 1e-6 * (std::abs(ref) + static_cast<double>(n));
        CHECK(std::abs(ops.dot(a.data(), b.data(), n) - ref) <= tol);

        auto y = random_vec(rng, n);
        auto y_ref = y;
        ops.axpy(0.75f, a.data(), y.data(), n);
        for (int64_t i = 0; i < n; ++i)
            y_ref[static_cast<size_t>(i)] += 0.75f * a[static_cast<size_t>(i)];
        CHECK(y == y_ref);

        auto s = a;
        ops.scale(s.data(), 1.5f, n);
        for (int64_t i = 0; i < n; ++i)
            CHECK(s[static_cast<size_t>(i)] ==
                  a[static_cast<size_t>(i)] * 1.5f);
    }
}

TEST_CASE("avx2 kernels agree with scalar within rounding") {
    if (!kern::avx2_supported())
        return; // host without AVX2: scalar-only build is the contract
    testutil::Rng rng(7);
    const auto& sc = kern::scalar_ops();
    const auto& vx = kern::avx2_ops();
    for (int64_t n : kSizes) {
        auto a = random_vec(rng, n);
        auto b = random_vec(rng, n);

        const double ref = dot_ref(a, b);
        const double tol = 1e-5 * (std::abs(ref) + static_cast<double>(n));
        CHECK(std::abs(vx.dot(a.data(), b.data(), n) - ref) <= tol);
        CHECK(std::abs(vx.dot(a.data(), b.data(), n) -
                       sc.dot(a.data(), b.data(), n)) <= tol);

        auto y0 = random_vec(rng, n);
        auto y1 = y0;
        sc.axpy(-1.25f, a.data(), y0.data(), n);
        vx.axpy(-1.25f, a.data(), y1.data(), n);
        for (int64_t i = 0; i < n; ++i)
            CHECK(std::abs(static_cast<double>(y0[static_cast<size_t>(i)]) -
                           static_cast<double>(y1[static_cast<size_t>(i)])) <=
                  1e-5);

        auto s0 = a;
        auto s1 = a;
        sc.scale(s0.data(), 0.3f, n);
        vx.scale(s1.data(), 0.3f, n);
        CHECK(s0 == s1); // same single multiply per lane
    }
}

TEST_CASE("kernel results are deterministic across calls") {
    testutil::Rng rng(11);
    auto a = random_vec(rng, 4608);
    auto b = random_vec(rng, 4608);
    const auto& ops = kern::ops();
    const float first = ops.dot(a.data(), b.data(), 4608);
    for (int i = 0; i < 5; ++i)
        CHECK(ops.dot(a.data(), b.data(), 4608) == first);
}

TEST_CASE("force_isa switches the active table") {
    const kern::Isa prev = kern::active_isa();
    kern::force_isa(kern::Isa::scalar);
    CHECK(kern::active_isa() == kern::Isa::scalar);
    if (kern::avx2_supported()) {
        kern::force_isa(kern::Isa::avx2);
        CHECK(kern::active_isa() == kern::Isa::avx2);
    }
    kern::force_isa(prev);
}
