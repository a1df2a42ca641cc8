#include "dfa2/kernels.hpp"

namespace dfa2::kern {
namespace {

float dot_scalar(const float* a, const float* b, int64_t n) {
    float acc = 0.0f;
    for (int64_t i = 0; i < n; ++i)
        acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(float alpha, const float* x, float* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

void scale_scalar(float* x, float s, int64_t n) {
    for (int64_t i = 0; i < n; ++i)
        x[i] *= s;
}

} // namespace

const Ops& scalar_ops() {
    static const Ops table{dot_scalar, axpy_scalar, scale_scalar, "scalar"};
    return table;
}

} // namespace dfa2::kern
