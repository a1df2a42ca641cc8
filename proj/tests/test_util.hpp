#pragma once

// Shared helpers for the test suites: seeded fills and error metrics kept
// independent of the library's generation code.

#include <cmath>
#include <cstdint>
#include <random>

#include "dfa2/tensor.hpp"

namespace testutil {

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * uniform());
    }

    uint64_t next() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

inline void fill_gaussian(dfa2::Tensor& t, Rng& rng, double scale = 1.0) {
    if (t.dtype() == dfa2::Dtype::f32) {
        float* p = t.f32();
        for (int64_t i = 0; i < t.numel(); ++i)
            p[i] = static_cast<float>(scale * rng.gaussian());
    } else {
        double* p = t.f64();
        for (int64_t i = 0; i < t.numel(); ++i)
            p[i] = scale * rng.gaussian();
    }
}

// Max-norm relative error of `got` against a float64 reference.
inline double max_rel_error(const dfa2::Tensor& got, const dfa2::Tensor& want64) {
    const dfa2::Tensor g = got.to_f64();
    const dfa2::Tensor w = want64.to_f64();
    const double* a = g.f64();
    const double* b = w.f64();
    double max_abs = 0.0, max_ref = 0.0;
    for (int64_t i = 0; i < w.numel(); ++i) {
        max_abs = std::max(max_abs, std::abs(a[i] - b[i]));
        max_ref = std::max(max_ref, std::abs(b[i]));
    }
    return max_abs / (max_ref + 1e-300);
}

} // namespace testutil
