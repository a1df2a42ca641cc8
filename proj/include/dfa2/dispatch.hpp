#pragma once

#include <cstdint>
#include <vector>

#include "dfa2/arrow.hpp"
#include "dfa2/cache.hpp"
#include "dfa2/tensor.hpp"

namespace dfa2 {

enum class StrategyKind { full, arrow, cached };

// Per-head execution mode: full attention, arrow attention with a window
// radius in blocks, or reuse of the cached output.
struct HeadStrategy {
    StrategyKind kind = StrategyKind::full;
    int64_t window_blocks = 0; // arrow only

    static HeadStrategy Full() { return {StrategyKind::full, 0}; }
    static HeadStrategy Arrow(int64_t w) { return {StrategyKind::arrow, w}; }
    static HeadStrategy Cached() { return {StrategyKind::cached, 0}; }

    bool operator==(const HeadStrategy&) const = default;
};

// One strategy per head for a single (timestep, layer) invocation.
struct LayerPlan {
    std::vector<HeadStrategy> strategies;

    static LayerPlan all_full(int64_t n_heads) {
        return {std::vector<HeadStrategy>(static_cast<size_t>(n_heads),
                                          HeadStrategy::Full())};
    }
    int64_t n_heads() const { return static_cast<int64_t>(strategies.size()); }
    bool operator==(const LayerPlan&) const = default;
};

// Runs every head of one (timestep, layer) under its assigned strategy in a
// single pass: Full heads match attention_reference bitwise, Arrow heads run
// the block-sparse kernel, Cached heads splice in the stored output. Two
// phases: all heads compute (cached reads see the pre-call state), then the
// computed heads commit their outputs to the cache.
Tensor multi_strategy_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                const LayerPlan& plan, HeadCache& cache,
                                int64_t layer, int64_t t,
                                const AttentionDims& dims, int64_t block_size);

// Sum over heads: Full -> dense count, Arrow(w) -> its mask's count,
// Cached -> 0.
int64_t plan_flops(const LayerPlan& plan, const AttentionDims& dims,
                   int64_t block_size);

} // namespace dfa2
