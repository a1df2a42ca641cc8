#pragma once

#include <cstdint>
#include <vector>

#include "dfa2/errors.hpp"

namespace dfa2 {

struct BlockMask;

enum class Dtype : uint32_t { f32 = 0, f64 = 1 };

// Dense row-major numeric array; the substrate for Q/K/V and attention
// outputs. Operations in this module surface NaN/Inf as errors instead of
// propagating them.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int64_t> shape, Dtype dt = Dtype::f32);
    static Tensor from_f32(std::vector<int64_t> shape, std::vector<float> data);
    static Tensor from_f64(std::vector<int64_t> shape, std::vector<double> data);

    Dtype dtype() const { return dtype_; }
    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
    int64_t dim(int64_t i) const;
    int64_t numel() const;

    float* f32();
    const float* f32() const;
    double* f64();
    const double* f64() const;

    Tensor to_f64() const;

    // Bitwise equality: same shape, dtype and payload bytes.
    bool operator==(const Tensor& other) const;
    bool operator!=(const Tensor& other) const { return !(*this == other); }

    bool all_finite() const;
    void check_finite(const char* what) const; // throws NonFiniteError

private:
    std::vector<int64_t> shape_;
    Dtype dtype_ = Dtype::f32;
    std::vector<float> f32_;
    std::vector<double> f64_;
};

enum class TokenOrder { visual_first, text_first };

// Joint-attention geometry: visual and text tokens concatenated along one
// sequence. Default ordering is visual tokens first (indices [0, n_visual)).
struct AttentionDims {
    int64_t n_heads = 0;
    int64_t head_dim = 0;
    int64_t n_visual = 0;
    int64_t n_text = 0;
    TokenOrder order = TokenOrder::visual_first;

    int64_t seq_len() const { return n_visual + n_text; }
    // Token index range occupied by text tokens, [first, last).
    int64_t text_begin() const {
        return order == TokenOrder::visual_first ? n_visual : 0;
    }
    int64_t text_end() const {
        return order == TokenOrder::visual_first ? seq_len() : n_text;
    }
    void validate() const; // throws ShapeError
};

// C = A x B for 2-D tensors of the same dtype. Summation runs over k in
// ascending order for every output element, so results are bit-reproducible
// and match a naive triple loop exactly.
Tensor matmul(const Tensor& a, const Tensor& b);

// Row-wise softmax with max-subtraction, 2-D input, finite entries required.
Tensor softmax_rows(const Tensor& x);

// Ground-truth scaled-dot-product attention over [H, N, d] tensors. When a
// mask is given, inactive blocks contribute score -inf; every query row must
// keep at least one active key. Pure scalar arithmetic with a fixed
// accumulation order; this is the oracle for all sparse paths.
Tensor attention_reference(const Tensor& q, const Tensor& k, const Tensor& v,
                           const BlockMask* mask = nullptr);

// Single-head f32 slice of the reference path, used by the multi-strategy
// executor so an all-Full plan is bitwise identical to attention_reference.
void attention_reference_head_f32(const float* q, const float* k, const float* v,
                                  float* out, int64_t n, int64_t d,
                                  const BlockMask* mask);

// Copy helpers between [H, N, d] tensors and per-head [N, d] slices.
Tensor head_slice(const Tensor& x, int64_t head);
void copy_into_head(Tensor& dst, int64_t head, const Tensor& src);

} // namespace dfa2
