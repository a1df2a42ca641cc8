#include "dfa2/dispatch.hpp"

#include <map>
#include <string>

#include "dfa2/util.hpp"

namespace dfa2 {
namespace {

void validate_plan_inputs(const Tensor& q, const Tensor& k, const Tensor& v,
                          const LayerPlan& plan, const AttentionDims& dims,
                          int64_t block_size) {
    dims.validate();
    if (block_size < 1)
        throw ShapeError("block_size must be >= 1");
    if (q.ndim() != 3 || q.shape() != k.shape() || q.shape() != v.shape())
        throw ShapeError("q/k/v must be identical [H, N, d] tensors");
    if (q.dtype() != Dtype::f32 || k.dtype() != Dtype::f32 || v.dtype() != Dtype::f32)
        throw ShapeError("multi-strategy attention runs in float32");
    if (q.dim(0) != dims.n_heads || q.dim(1) != dims.seq_len() ||
        q.dim(2) != dims.head_dim)
        throw ShapeError("tensor shape disagrees with dims");
    if (plan.n_heads() != dims.n_heads)
        throw ShapeError("plan must assign exactly one strategy per head");
}

} // namespace

Tensor multi_strategy_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                const LayerPlan& plan, HeadCache& cache,
                                int64_t layer, int64_t t,
                                const AttentionDims& dims, int64_t block_size) {
    validate_plan_inputs(q, k, v, plan, dims, block_size);
    const int64_t n = dims.seq_len();
    const int64_t d = dims.head_dim;

    // Validate cached heads and build one mask per distinct window up front.
    std::map<int64_t, BlockMask> masks;
    for (int64_t h = 0; h < plan.n_heads(); ++h) {
        const HeadStrategy& s = plan.strategies[static_cast<size_t>(h)];
        if (s.kind == StrategyKind::cached) {
            if (!cache.has(layer, h))
                throw CacheMissError("plan marks head " + std::to_string(h) +
                                     " Cached before it ever computed");
            const Tensor& stored = cache.fetch(layer, h);
            if (stored.dim(0) != n || stored.dim(1) != d)
                throw ShapeError("cached output shape disagrees with dims");
        } else if (s.kind == StrategyKind::arrow) {
            if (!masks.count(s.window_blocks))
                masks.emplace(s.window_blocks,
                              build_arrow_mask({dims, block_size, s.window_blocks}));
        }
    }

    Tensor out = Tensor::zeros(q.shape(), Dtype::f32);
    float* out_base = out.f32();
    const float* q_base = q.f32();
    const float* k_base = k.f32();
    const float* v_base = v.f32();

    // Phase 1: compute. Heads are independent; cached heads read the
    // pre-call cache state.
    parallel_for(plan.n_heads(), [&](int64_t h) {
        const HeadStrategy& s = plan.strategies[static_cast<size_t>(h)];
        const int64_t off = h * n * d;
        switch (s.kind) {
        case StrategyKind::full:
            attention_reference_head_f32(q_base + off, k_base + off, v_base + off,
                                         out_base + off, n, d, nullptr);
            break;
        case StrategyKind::arrow:
            sparse_attention_forward(q_base + off, k_base + off, v_base + off,
                                     out_base + off, n, d,
                                     masks.at(s.window_blocks));
            break;
        case StrategyKind::cached: {
            const Tensor& stored = cache.fetch(layer, h);
            std::copy(stored.f32(), stored.f32() + n * d, out_base + off);
            break;
        }
        }
    });

    // Phase 2: commit computed heads.
    for (int64_t h = 0; h < plan.n_heads(); ++h)
        if (plan.strategies[static_cast<size_t>(h)].kind != StrategyKind::cached)
            cache.store(layer, h, head_slice(out, h), t);

    return out;
}

int64_t plan_flops(const LayerPlan& plan, const AttentionDims& dims,
                   int64_t block_size) {
    dims.validate();
    const int64_t n = dims.seq_len();
    std::map<int64_t, int64_t> arrow_flops;
    int64_t total = 0;
    for (const HeadStrategy& s : plan.strategies) {
        switch (s.kind) {
        case StrategyKind::full:
            total += dense_flops(n, dims.head_dim);
            break;
        case StrategyKind::arrow: {
            auto it = arrow_flops.find(s.window_blocks);
            if (it == arrow_flops.end()) {
                const BlockMask m =
                    build_arrow_mask({dims, block_size, s.window_blocks});
                it = arrow_flops.emplace(s.window_blocks,
                                         flops_count(m, dims.head_dim)).first;
            }
            total += it->second;
            break;
        }
        case StrategyKind::cached:
            break; // a copy, not a matmul
        }
    }
    return total;
}

} // namespace dfa2
