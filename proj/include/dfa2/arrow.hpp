#pragma once

#include <cstdint>
#include <vector>

#include "dfa2/tensor.hpp"

namespace dfa2 {

// Boolean grid over (query-block x key-block) tiles. Blocks are B tokens on
// each edge with a ragged final block when B does not divide N.
struct BlockMask {
    int64_t block_size = 0;
    int64_t seq_len = 0;
    int64_t n_query_blocks = 0;
    int64_t n_key_blocks = 0;
    std::vector<uint8_t> active; // row-major [n_query_blocks * n_key_blocks]

    static BlockMask all_active(int64_t seq_len, int64_t block_size);

    bool is_active(int64_t i, int64_t j) const {
        return active[i * n_key_blocks + j] != 0;
    }
    void set(int64_t i, int64_t j, bool v) {
        active[i * n_key_blocks + j] = v ? 1 : 0;
    }
    int64_t block_begin(int64_t i) const { return i * block_size; }
    // Tokens covered by block i (the final block may be short).
    int64_t block_len(int64_t i) const;
    // Token positions covered by active blocks, ragged tails counted by true
    // coverage.
    int64_t active_positions() const;
    bool row_has_active(int64_t i) const;
};

// Arrow pattern: a diagonal band of width `window_blocks` over visual-visual
// blocks plus fully dense rows/columns for every block containing a text
// token (mixed blocks are densified).
struct ArrowSpec {
    AttentionDims dims;
    int64_t block_size = 0;
    int64_t window_blocks = 0;
};

BlockMask build_arrow_mask(const ArrowSpec& spec);

// Multiply-add convention: 4*d per active (query, key) token position
// (two matmuls, two flops per element); softmax excluded.
int64_t flops_count(const BlockMask& mask, int64_t head_dim);
int64_t dense_flops(int64_t seq_len, int64_t head_dim);

// 1 - active_positions / N^2.
double sparsity_ratio(const BlockMask& mask);

// Streaming-softmax block-sparse attention over one head: tiles over active
// key blocks per query block, maintaining a running max and normalizer, no
// N x N materialization. Matches attention_reference with the same mask
// within 1e-5 relative error (f32).
void sparse_attention_forward(const float* q, const float* k, const float* v,
                              float* out, int64_t n, int64_t d,
                              const BlockMask& mask, bool parallel = false);
Tensor sparse_attention_forward(const Tensor& q, const Tensor& k, const Tensor& v,
                                const BlockMask& mask);

// Dense baseline with the same tiling and streaming softmax but no mask
// lookups; the benchmark reference path.
void dense_tiled_attention(const float* q, const float* k, const float* v,
                           float* out, int64_t n, int64_t d, int64_t block_size,
                           bool parallel = false);

} // namespace dfa2
