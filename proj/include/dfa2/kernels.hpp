#pragma once

#include <cstdint>

namespace dfa2::kern {

enum class Isa { scalar, avx2 };

// Table of the f32 primitives behind the tiled attention kernels. Every
// variant of an entry computes the same quantity; only the lane grouping of
// the reduction differs, so cross-ISA results agree to rounding while any
// single ISA is bit-reproducible run to run.
struct Ops {
    float (*dot)(const float* a, const float* b, int64_t n);
    void (*axpy)(float alpha, const float* x, float* y, int64_t n); // y += alpha*x
    void (*scale)(float* x, float s, int64_t n);                    // x *= s
    const char* name;
};

const Ops& scalar_ops();

// True when the AVX2 variants were compiled in and the CPU reports AVX2+FMA.
bool avx2_supported();
const Ops& avx2_ops(); // throws if !avx2_supported()

// Active table. Resolved once from DFA2_SIMD (scalar|avx2|auto, default
// auto: avx2 when supported, scalar otherwise).
const Ops& ops();
Isa active_isa();
void force_isa(Isa isa); // test hook; throws if the ISA is unavailable

} // namespace dfa2::kern
