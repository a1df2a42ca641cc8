#include "dfa2/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace dfa2::kern {
namespace {

bool cpu_has_avx2() {
#if defined(DFA2_HAVE_AVX2) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::atomic<const Ops*> g_active{nullptr};

const Ops* resolve_from_env() {
    const char* env = std::getenv("DFA2_SIMD");
    const std::string mode = env ? env : "auto";
    if (mode == "scalar")
        return &scalar_ops();
    if (mode == "avx2") {
        if (!avx2_supported())
            throw std::runtime_error("DFA2_SIMD=avx2 but AVX2+FMA is unavailable");
        return &avx2_ops();
    }
    return avx2_supported() ? &avx2_ops() : &scalar_ops();
}

} // namespace

#if !defined(DFA2_HAVE_AVX2)
const Ops& avx2_ops() {
    throw std::runtime_error("AVX2 kernels were not compiled into this build");
}
#endif

bool avx2_supported() {
    static const bool ok = cpu_has_avx2();
    return ok;
}

const Ops& ops() {
    const Ops* t = g_active.load(std::memory_order_acquire);
    if (t == nullptr) {
        t = resolve_from_env();
        g_active.store(t, std::memory_order_release);
    }
    return *t;
}

Isa active_isa() {
    return &ops() == &scalar_ops() ? Isa::scalar : Isa::avx2;
}

void force_isa(Isa isa) {
    if (isa == Isa::avx2 && !avx2_supported())
        throw std::runtime_error("AVX2 kernels unavailable on this host");
    g_active.store(isa == Isa::scalar ? &scalar_ops() : &avx2_ops(),
                   std::memory_order_release);
}

} // namespace dfa2::kern
