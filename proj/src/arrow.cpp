#include "dfa2/arrow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dfa2/kernels.hpp"
#include "dfa2/util.hpp"

namespace dfa2 {
namespace {

int64_t ceil_div(int64_t a, int64_t b) {
    return (a + b - 1) / b;
}

// Shared tile loop for the streaming-softmax paths. Per query block it keeps
// a running max m, normalizer l and unnormalized accumulator per row, and
// folds key blocks in ascending index order:
//   alpha = exp(m_old - m_new); l = l*alpha + sum_j exp(s_j - m_new)
//   acc   = acc*alpha + sum_j exp(s_j - m_new) * v_j
// One pass over the active set, no N x N matrix.
template <typename NextBlock>
void streaming_block_pass(const float* q, const float* k, const float* v,
                          float* out, int64_t n, int64_t d, int64_t block_size,
                          int64_t qb, NextBlock&& for_each_key_block) {
    const auto& ops = kern::ops();
    const float scale = 1.0f / std::sqrt(static_cast<float>(d));
    constexpr float neg_inf = -std::numeric_limits<float>::infinity();

    const int64_t r0 = qb * block_size;
    const int64_t rows = std::min(block_size, n - r0);

    std::vector<float> acc(static_cast<size_t>(rows * d), 0.0f);
    std::vector<float> run_max(static_cast<size_t>(rows), neg_inf);
    std::vector<float> run_sum(static_cast<size_t>(rows), 0.0f);
    std::vector<float> scores(static_cast<size_t>(block_size));

    for_each_key_block([&](int64_t kb) {
        const int64_t c0 = kb * block_size;
        const int64_t cols = std::min(block_size, n - c0);
        for (int64_t r = 0; r < rows; ++r) {
            const float* qrow = q + (r0 + r) * d;
            float bmax = neg_inf;
            for (int64_t c = 0; c < cols; ++c) {
                const float s = ops.dot(qrow, k + (c0 + c) * d, d) * scale;
                scores[static_cast<size_t>(c)] = s;
                if (s > bmax)
                    bmax = s;
            }
            const float m_new = run_max[r] > bmax ? run_max[r] : bmax;
            if (run_max[r] != neg_inf && m_new != run_max[r]) {
                const float alpha = std::exp(run_max[r] - m_new);
                run_sum[r] *= alpha;
                ops.scale(acc.data() + r * d, alpha, d);
            }
            for (int64_t c = 0; c < cols; ++c) {
                const float p = std::exp(scores[static_cast<size_t>(c)] - m_new);
                run_sum[r] += p;
                ops.axpy(p, v + (c0 + c) * d, acc.data() + r * d, d);
            }
            run_max[r] = m_new;
        }
    });

    for (int64_t r = 0; r < rows; ++r) {
        ops.scale(acc.data() + r * d, 1.0f / run_sum[r], d);
        std::copy(acc.begin() + r * d, acc.begin() + (r + 1) * d,
                  out + (r0 + r) * d);
    }
}

} // namespace

BlockMask BlockMask::all_active(int64_t seq_len, int64_t block_size) {
    if (block_size < 1)
        throw ShapeError("block_size must be >= 1");
    if (seq_len < 1)
        throw ShapeError("seq_len must be >= 1");
    BlockMask m;
    m.block_size = block_size;
    m.seq_len = seq_len;
    m.n_query_blocks = ceil_div(seq_len, block_size);
    m.n_key_blocks = m.n_query_blocks;
    m.active.assign(static_cast<size_t>(m.n_query_blocks * m.n_key_blocks), 1);
    return m;
}

int64_t BlockMask::block_len(int64_t i) const {
    const int64_t begin = i * block_size;
    return std::min(block_size, seq_len - begin);
}

int64_t BlockMask::active_positions() const {
    int64_t total = 0;
    for (int64_t i = 0; i < n_query_blocks; ++i) {
        const int64_t rows = block_len(i);
        for (int64_t j = 0; j < n_key_blocks; ++j)
            if (is_active(i, j))
                total += rows * block_len(j);
    }
    return total;
}

bool BlockMask::row_has_active(int64_t i) const {
    for (int64_t j = 0; j < n_key_blocks; ++j)
        if (is_active(i, j))
            return true;
    return false;
}

BlockMask build_arrow_mask(const ArrowSpec& spec) {
    spec.dims.validate();
    if (spec.block_size < 1)
        throw ShapeError("block_size must be >= 1");
    if (spec.window_blocks < 0)
        throw ShapeError("window_blocks must be >= 0");

    const int64_t n = spec.dims.seq_len();
    const int64_t b = spec.block_size;
    const int64_t nb = ceil_div(n, b);

    // A block containing any text token is densified into the text band.
    const int64_t text_lo = spec.dims.text_begin();
    const int64_t text_hi = spec.dims.text_end();
    std::vector<uint8_t> is_text(static_cast<size_t>(nb), 0);
    for (int64_t i = 0; i < nb; ++i) {
        const int64_t lo = i * b;
        const int64_t hi = std::min(lo + b, n);
        is_text[static_cast<size_t>(i)] = (lo < text_hi && hi > text_lo) ? 1 : 0;
    }

    // Windows past the visual extent clamp to full coverage.
    const int64_t n_visual_blocks = ceil_div(spec.dims.n_visual, b);
    const int64_t w = std::min(spec.window_blocks,
                               std::max<int64_t>(0, n_visual_blocks - 1));

    BlockMask m;
    m.block_size = b;
    m.seq_len = n;
    m.n_query_blocks = nb;
    m.n_key_blocks = nb;
    m.active.assign(static_cast<size_t>(nb * nb), 0);
    for (int64_t i = 0; i < nb; ++i)
        for (int64_t j = 0; j < nb; ++j) {
            const bool on = is_text[static_cast<size_t>(i)] ||
                            is_text[static_cast<size_t>(j)] ||
                            std::llabs(i - j) <= w;
            m.set(i, j, on);
        }
    return m;
}

int64_t flops_count(const BlockMask& mask, int64_t head_dim) {
    if (head_dim < 1)
        throw ShapeError("head_dim must be >= 1");
    return 4 * head_dim * mask.active_positions();
}

int64_t dense_flops(int64_t seq_len, int64_t head_dim) {
    return 4 * head_dim * seq_len * seq_len;
}

double sparsity_ratio(const BlockMask& mask) {
    const double total = static_cast<double>(mask.seq_len) *
                         static_cast<double>(mask.seq_len);
    return 1.0 - static_cast<double>(mask.active_positions()) / total;
}

void sparse_attention_forward(const float* q, const float* k, const float* v,
                              float* out, int64_t n, int64_t d,
                              const BlockMask& mask, bool parallel) {
    if (mask.seq_len != n)
        throw ShapeError("mask sequence length disagrees with tensors");
    for (int64_t i = 0; i < mask.n_query_blocks; ++i)
        if (!mask.row_has_active(i))
            throw FullyMaskedRowError("query block " + std::to_string(i) +
                                      " has no active key blocks");

    auto run_block = [&](int64_t qb) {
        streaming_block_pass(q, k, v, out, n, d, mask.block_size, qb,
                             [&](auto&& fold) {
                                 for (int64_t kb = 0; kb < mask.n_key_blocks; ++kb)
                                     if (mask.is_active(qb, kb))
                                         fold(kb);
                             });
    };
    if (parallel)
        parallel_for(mask.n_query_blocks, run_block);
    else
        for (int64_t qb = 0; qb < mask.n_query_blocks; ++qb)
            run_block(qb);
}

Tensor sparse_attention_forward(const Tensor& q, const Tensor& k, const Tensor& v,
                                const BlockMask& mask) {
    if (q.ndim() != 2 || k.ndim() != 2 || v.ndim() != 2)
        throw ShapeError("sparse attention expects per-head [N, d] tensors");
    if (q.shape() != k.shape() || q.shape() != v.shape())
        throw ShapeError("q/k/v shapes disagree");
    if (q.dtype() != Dtype::f32)
        throw ShapeError("sparse attention runs in float32");
    Tensor out = Tensor::zeros(q.shape(), Dtype::f32);
    sparse_attention_forward(q.f32(), k.f32(), v.f32(), out.f32(),
                             q.dim(0), q.dim(1), mask);
    return out;
}

void dense_tiled_attention(const float* q, const float* k, const float* v,
                           float* out, int64_t n, int64_t d, int64_t block_size,
                           bool parallel) {
    if (block_size < 1)
        throw ShapeError("block_size must be >= 1");
    const int64_t nb = ceil_div(n, block_size);
    auto run_block = [&](int64_t qb) {
        streaming_block_pass(q, k, v, out, n, d, block_size, qb,
                             [&](auto&& fold) {
                                 for (int64_t kb = 0; kb < nb; ++kb)
                                     fold(kb);
                             });
    };
    if (parallel)
        parallel_for(nb, run_block);
    else
        for (int64_t qb = 0; qb < nb; ++qb)
            run_block(qb);
}

} // namespace dfa2
