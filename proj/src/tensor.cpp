#include "dfa2/tensor.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "dfa2/arrow.hpp"

namespace dfa2 {
namespace {

int64_t shape_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d < 0)
            throw ShapeError("negative dimension");
        n *= d;
    }
    return n;
}

// Fixed-order scalar primitives for the reference paths. The SIMD kernels
// are deliberately not used here: the oracle must match a naive loop
// bit for bit.
template <typename T>
T dot_fixed(const T* a, const T* b, int64_t n) {
    T acc = T(0);
    for (int64_t i = 0; i < n; ++i)
        acc += a[i] * b[i];
    return acc;
}

template <typename T>
void axpy_fixed(T alpha, const T* x, T* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

template <typename T>
void matmul_impl(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        T* crow = c + i * n;
        for (int64_t j = 0; j < n; ++j)
            crow[j] = T(0);
        for (int64_t kk = 0; kk < k; ++kk)
            axpy_fixed(a[i * k + kk], b + kk * n, crow, n);
    }
}

template <typename T>
void softmax_rows_impl(const T* x, T* y, int64_t m, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const T* row = x + i * n;
        T mx = row[0];
        for (int64_t j = 1; j < n; ++j)
            mx = row[j] > mx ? row[j] : mx;
        T denom = T(0);
        T* out = y + i * n;
        for (int64_t j = 0; j < n; ++j) {
            out[j] = std::exp(row[j] - mx);
            denom += out[j];
        }
        const T inv = T(1) / denom;
        for (int64_t j = 0; j < n; ++j)
            out[j] *= inv;
    }
}

// Two-pass masked softmax attention, one query row at a time. Weights are
// normalized before the value accumulation so the result is bitwise
// identical to composing matmul, softmax_rows and matmul.
template <typename T>
void attention_head_impl(const T* q, const T* k, const T* v, T* out,
                         int64_t n, int64_t d, const BlockMask* mask) {
    const T scale = T(1) / std::sqrt(static_cast<T>(d));
    constexpr T neg_inf = -std::numeric_limits<T>::infinity();
    std::vector<T> weights(static_cast<size_t>(n));

    for (int64_t i = 0; i < n; ++i) {
        const T* qrow = q + i * d;
        const int64_t qb = mask ? i / mask->block_size : 0;
        T mx = neg_inf;
        for (int64_t j = 0; j < n; ++j) {
            if (mask && !mask->is_active(qb, j / mask->block_size)) {
                weights[j] = neg_inf;
                continue;
            }
            const T s = dot_fixed(qrow, k + j * d, d) * scale;
            weights[j] = s;
            if (s > mx)
                mx = s;
        }
        if (mx == neg_inf)
            throw FullyMaskedRowError("query row " + std::to_string(i) +
                                      " has no active key positions");
        T denom = T(0);
        for (int64_t j = 0; j < n; ++j) {
            if (weights[j] == neg_inf) {
                weights[j] = T(0);
                continue;
            }
            weights[j] = std::exp(weights[j] - mx);
            denom += weights[j];
        }
        const T inv = T(1) / denom;
        T* orow = out + i * d;
        for (int64_t c = 0; c < d; ++c)
            orow[c] = T(0);
        for (int64_t j = 0; j < n; ++j)
            if (weights[j] != T(0))
                axpy_fixed(weights[j] * inv, v + j * d, orow, d);
    }
}

} // namespace

Tensor Tensor::zeros(std::vector<int64_t> shape, Dtype dt) {
    Tensor t;
    const int64_t n = shape_numel(shape);
    t.shape_ = std::move(shape);
    t.dtype_ = dt;
    if (dt == Dtype::f32)
        t.f32_.assign(static_cast<size_t>(n), 0.0f);
    else
        t.f64_.assign(static_cast<size_t>(n), 0.0);
    return t;
}

Tensor Tensor::from_f32(std::vector<int64_t> shape, std::vector<float> data) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
        throw ShapeError("data length does not match shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.dtype_ = Dtype::f32;
    t.f32_ = std::move(data);
    return t;
}

Tensor Tensor::from_f64(std::vector<int64_t> shape, std::vector<double> data) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
        throw ShapeError("data length does not match shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.dtype_ = Dtype::f64;
    t.f64_ = std::move(data);
    return t;
}

int64_t Tensor::dim(int64_t i) const {
    if (i < 0 || i >= ndim())
        throw ShapeError("dimension index out of range");
    return shape_[static_cast<size_t>(i)];
}

int64_t Tensor::numel() const {
    return dtype_ == Dtype::f32 ? static_cast<int64_t>(f32_.size())
                                : static_cast<int64_t>(f64_.size());
}

float* Tensor::f32() {
    if (dtype_ != Dtype::f32)
        throw ShapeError("tensor is not float32");
    return f32_.data();
}

const float* Tensor::f32() const {
    if (dtype_ != Dtype::f32)
        throw ShapeError("tensor is not float32");
    return f32_.data();
}

double* Tensor::f64() {
    if (dtype_ != Dtype::f64)
        throw ShapeError("tensor is not float64");
    return f64_.data();
}

const double* Tensor::f64() const {
    if (dtype_ != Dtype::f64)
        throw ShapeError("tensor is not float64");
    return f64_.data();
}

Tensor Tensor::to_f64() const {
    if (dtype_ == Dtype::f64)
        return *this;
    Tensor t = zeros(shape_, Dtype::f64);
    double* dst = t.f64();
    for (size_t i = 0; i < f32_.size(); ++i)
        dst[i] = static_cast<double>(f32_[i]);
    return t;
}

bool Tensor::operator==(const Tensor& other) const {
    if (dtype_ != other.dtype_ || shape_ != other.shape_)
        return false;
    if (dtype_ == Dtype::f32)
        return f32_.size() == other.f32_.size() &&
               std::memcmp(f32_.data(), other.f32_.data(),
                           f32_.size() * sizeof(float)) == 0;
    return f64_.size() == other.f64_.size() &&
           std::memcmp(f64_.data(), other.f64_.data(),
                       f64_.size() * sizeof(double)) == 0;
}

bool Tensor::all_finite() const {
    if (dtype_ == Dtype::f32) {
        for (float v : f32_)
            if (!std::isfinite(v))
                return false;
    } else {
        for (double v : f64_)
            if (!std::isfinite(v))
                return false;
    }
    return true;
}

void Tensor::check_finite(const char* what) const {
    if (!all_finite())
        throw NonFiniteError(std::string(what) + ": non-finite scalar");
}

void AttentionDims::validate() const {
    if (n_heads < 1 || head_dim < 1)
        throw ShapeError("n_heads and head_dim must be >= 1");
    if (n_visual < 1 || n_text < 0)
        throw ShapeError("need n_visual >= 1 and n_text >= 0");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2)
        throw ShapeError("matmul expects 2-D tensors");
    if (a.dtype() != b.dtype())
        throw ShapeError("matmul dtype mismatch");
    if (a.dim(1) != b.dim(0))
        throw ShapeError("matmul inner dimensions disagree");
    a.check_finite("matmul lhs");
    b.check_finite("matmul rhs");

    const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c = Tensor::zeros({m, n}, a.dtype());
    if (a.dtype() == Dtype::f32)
        matmul_impl(a.f32(), b.f32(), c.f32(), m, k, n);
    else
        matmul_impl(a.f64(), b.f64(), c.f64(), m, k, n);
    c.check_finite("matmul result");
    return c;
}

Tensor softmax_rows(const Tensor& x) {
    if (x.ndim() != 2)
        throw ShapeError("softmax_rows expects a 2-D tensor");
    x.check_finite("softmax input");
    const int64_t m = x.dim(0), n = x.dim(1);
    if (n < 1)
        throw ShapeError("softmax_rows needs at least one column");
    Tensor y = Tensor::zeros({m, n}, x.dtype());
    if (x.dtype() == Dtype::f32)
        softmax_rows_impl(x.f32(), y.f32(), m, n);
    else
        softmax_rows_impl(x.f64(), y.f64(), m, n);
    y.check_finite("softmax result");
    return y;
}

Tensor attention_reference(const Tensor& q, const Tensor& k, const Tensor& v,
                           const BlockMask* mask) {
    if (q.ndim() != 3 || k.ndim() != 3 || v.ndim() != 3)
        throw ShapeError("attention expects [H, N, d] tensors");
    if (q.shape() != k.shape() || q.shape() != v.shape())
        throw ShapeError("q/k/v shapes disagree");
    if (q.dtype() != k.dtype() || q.dtype() != v.dtype())
        throw ShapeError("q/k/v dtypes disagree");
    const int64_t h = q.dim(0), n = q.dim(1), d = q.dim(2);
    if (mask && mask->seq_len != n)
        throw ShapeError("mask sequence length disagrees with tensors");
    q.check_finite("attention q");
    k.check_finite("attention k");
    v.check_finite("attention v");

    Tensor out = Tensor::zeros(q.shape(), q.dtype());
    for (int64_t head = 0; head < h; ++head) {
        const int64_t off = head * n * d;
        if (q.dtype() == Dtype::f32)
            attention_head_impl(q.f32() + off, k.f32() + off, v.f32() + off,
                                out.f32() + off, n, d, mask);
        else
            attention_head_impl(q.f64() + off, k.f64() + off, v.f64() + off,
                                out.f64() + off, n, d, mask);
    }
    out.check_finite("attention result");
    return out;
}

void attention_reference_head_f32(const float* q, const float* k, const float* v,
                                  float* out, int64_t n, int64_t d,
                                  const BlockMask* mask) {
    attention_head_impl<float>(q, k, v, out, n, d, mask);
}

Tensor head_slice(const Tensor& x, int64_t head) {
    if (x.ndim() != 3)
        throw ShapeError("head_slice expects [H, N, d]");
    if (head < 0 || head >= x.dim(0))
        throw ShapeError("head index out of range");
    const int64_t n = x.dim(1), d = x.dim(2);
    Tensor s = Tensor::zeros({n, d}, x.dtype());
    const int64_t off = head * n * d;
    if (x.dtype() == Dtype::f32)
        std::memcpy(s.f32(), x.f32() + off, sizeof(float) * n * d);
    else
        std::memcpy(s.f64(), x.f64() + off, sizeof(double) * n * d);
    return s;
}

void copy_into_head(Tensor& dst, int64_t head, const Tensor& src) {
    if (dst.ndim() != 3 || src.ndim() != 2)
        throw ShapeError("copy_into_head expects [H, N, d] and [N, d]");
    if (dst.dtype() != src.dtype())
        throw ShapeError("copy_into_head dtype mismatch");
    if (src.dim(0) != dst.dim(1) || src.dim(1) != dst.dim(2))
        throw ShapeError("copy_into_head shape mismatch");
    if (head < 0 || head >= dst.dim(0))
        throw ShapeError("head index out of range");
    const int64_t n = dst.dim(1), d = dst.dim(2);
    const int64_t off = head * n * d;
    if (dst.dtype() == Dtype::f32)
        std::memcpy(dst.f32() + off, src.f32(), sizeof(float) * n * d);
    else
        std::memcpy(dst.f64() + off, src.f64(), sizeof(double) * n * d);
}

} // namespace dfa2
