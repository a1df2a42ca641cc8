#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dfa2/arrow.hpp"
#include "dfa2/tensor.hpp"
#include "test_util.hpp"

using namespace dfa2;

namespace {

// Independent naive triple-loop product.
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
    const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c = Tensor::zeros({m, n}, a.dtype());
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j)
            for (int64_t kk = 0; kk < k; ++kk) {
                if (a.dtype() == Dtype::f32)
                    c.f32()[i * n + j] += a.f32()[i * k + kk] * b.f32()[kk * n + j];
                else
                    c.f64()[i * n + j] += a.f64()[i * k + kk] * b.f64()[kk * n + j];
            }
    return c;
}

Tensor identity(int64_t n) {
    Tensor t = Tensor::zeros({n, n});
    for (int64_t i = 0; i < n; ++i)
        t.f32()[i * n + i] = 1.0f;
    return t;
}

} // namespace

TEST_CASE("matmul identity") {
    testutil::Rng rng(1);
    Tensor a = Tensor::zeros({3, 3});
    testutil::fill_gaussian(a, rng);
    CHECK(matmul(identity(3), a) == a);
}

TEST_CASE("matmul hand-checked 2x2") {
    const Tensor a = Tensor::from_f32({2, 2}, {1, 2, 3, 4});
    const Tensor b = Tensor::from_f32({2, 1}, {1, 1});
    const Tensor c = matmul(a, b);
    CHECK(c.f32()[0] == 3.0f);
    CHECK(c.f32()[1] == 7.0f);
}

TEST_CASE("matmul matches the naive triple loop exactly") {
    testutil::Rng rng(2);
    for (int round = 0; round < 4; ++round) {
        Tensor a = Tensor::zeros({8, 8});
        Tensor b = Tensor::zeros({8, 8});
        testutil::fill_gaussian(a, rng);
        testutil::fill_gaussian(b, rng);
        CHECK(matmul(a, b) == matmul_oracle(a, b));
        CHECK(matmul(a.to_f64(), b.to_f64()) ==
              matmul_oracle(a.to_f64(), b.to_f64()));
    }
}

TEST_CASE("matmul rejects mismatched shapes and non-finite input") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({2, 3});
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
    Tensor c = Tensor::zeros({3, 2});
    a.f32()[0] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(matmul(a, c), NonFiniteError);
}

TEST_CASE("softmax symmetric row") {
    const Tensor x = Tensor::from_f32({1, 3}, {0, 0, 0});
    const Tensor y = softmax_rows(x);
    for (int i = 0; i < 3; ++i)
        CHECK(y.f32()[i] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("softmax survives large logits") {
    const Tensor x = Tensor::from_f32({1, 2}, {1000.0f, 0.0f});
    const Tensor y = softmax_rows(x);
    CHECK(y.f32()[0] == 1.0f);
    CHECK(y.f32()[1] == 0.0f);
}

TEST_CASE("softmax rows match the float64 two-pass oracle") {
    testutil::Rng rng(3);
    Tensor x = Tensor::zeros({4, 4});
    testutil::fill_gaussian(x, rng, 3.0);
    const Tensor y = softmax_rows(x);
    const Tensor y64 = softmax_rows(x.to_f64());
    CHECK(testutil::max_rel_error(y, y64) < 1e-6);

    // Row-stochasticity at dtype tolerance.
    for (int64_t i = 0; i < 4; ++i) {
        double s32 = 0.0, s64 = 0.0;
        for (int64_t j = 0; j < 4; ++j) {
            s32 += y.f32()[i * 4 + j];
            s64 += y64.f64()[i * 4 + j];
        }
        CHECK(std::abs(s32 - 1.0) < 1e-6);
        CHECK(std::abs(s64 - 1.0) < 1e-12);
    }
}

TEST_CASE("attention with one token returns v") {
    testutil::Rng rng(4);
    Tensor q = Tensor::zeros({2, 1, 8});
    Tensor k = Tensor::zeros({2, 1, 8});
    Tensor v = Tensor::zeros({2, 1, 8});
    testutil::fill_gaussian(q, rng);
    testutil::fill_gaussian(k, rng);
    testutil::fill_gaussian(v, rng);
    CHECK(attention_reference(q, k, v) == v);
}

TEST_CASE("all-active mask is bitwise identical to no mask") {
    testutil::Rng rng(5);
    Tensor q = Tensor::zeros({2, 24, 8});
    Tensor k = Tensor::zeros({2, 24, 8});
    Tensor v = Tensor::zeros({2, 24, 8});
    testutil::fill_gaussian(q, rng);
    testutil::fill_gaussian(k, rng);
    testutil::fill_gaussian(v, rng);
    const BlockMask mask = BlockMask::all_active(24, 8);
    CHECK(attention_reference(q, k, v, &mask) == attention_reference(q, k, v));
}

TEST_CASE("attention matches a per-element float64 oracle under random masks") {
    testutil::Rng rng(6);
    Tensor q = Tensor::zeros({2, 16, 4});
    Tensor k = Tensor::zeros({2, 16, 4});
    Tensor v = Tensor::zeros({2, 16, 4});
    testutil::fill_gaussian(q, rng);
    testutil::fill_gaussian(k, rng);
    testutil::fill_gaussian(v, rng);

    BlockMask mask = BlockMask::all_active(16, 4);
    for (int64_t i = 0; i < mask.n_query_blocks; ++i)
        for (int64_t j = 0; j < mask.n_key_blocks; ++j)
            mask.set(i, j, rng.uniform() < 0.6 || i == j);

    const Tensor got = attention_reference(q, k, v, &mask);
    const Tensor want =
        attention_reference(q.to_f64(), k.to_f64(), v.to_f64(), &mask);
    CHECK(testutil::max_rel_error(got, want) < 1e-5);
}

TEST_CASE("attention is equivariant under head permutation") {
    testutil::Rng rng(7);
    const int64_t h = 3, n = 12, d = 4;
    Tensor q = Tensor::zeros({h, n, d});
    Tensor k = Tensor::zeros({h, n, d});
    Tensor v = Tensor::zeros({h, n, d});
    testutil::fill_gaussian(q, rng);
    testutil::fill_gaussian(k, rng);
    testutil::fill_gaussian(v, rng);
    const Tensor out = attention_reference(q, k, v);

    const int64_t perm[3] = {2, 0, 1};
    Tensor qp = Tensor::zeros({h, n, d});
    Tensor kp = Tensor::zeros({h, n, d});
    Tensor vp = Tensor::zeros({h, n, d});
    for (int64_t i = 0; i < h; ++i) {
        copy_into_head(qp, i, head_slice(q, perm[i]));
        copy_into_head(kp, i, head_slice(k, perm[i]));
        copy_into_head(vp, i, head_slice(v, perm[i]));
    }
    const Tensor outp = attention_reference(qp, kp, vp);
    for (int64_t i = 0; i < h; ++i)
        CHECK(head_slice(outp, i) == head_slice(out, perm[i]));
}

TEST_CASE("attention is deterministic across runs") {
    testutil::Rng rng(8);
    Tensor q = Tensor::zeros({2, 20, 8});
    Tensor k = Tensor::zeros({2, 20, 8});
    Tensor v = Tensor::zeros({2, 20, 8});
    testutil::fill_gaussian(q, rng);
    testutil::fill_gaussian(k, rng);
    testutil::fill_gaussian(v, rng);
    CHECK(attention_reference(q, k, v) == attention_reference(q, k, v));
}

TEST_CASE("attention equals matmul-softmax-matmul composition bitwise") {
    testutil::Rng rng(9);
    const int64_t n = 10, d = 4;
    Tensor q = Tensor::zeros({1, n, d});
    Tensor k = Tensor::zeros({1, n, d});
    Tensor v = Tensor::zeros({1, n, d});
    testutil::fill_gaussian(q, rng);
    testutil::fill_gaussian(k, rng);
    testutil::fill_gaussian(v, rng);

    Tensor q2 = Tensor::from_f32({n, d}, std::vector<float>(q.f32(), q.f32() + n * d));
    Tensor kt = Tensor::zeros({d, n});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < d; ++j)
            kt.f32()[j * n + i] = k.f32()[i * d + j];
    Tensor scores = matmul(q2, kt);
    const float scale = 1.0f / std::sqrt(static_cast<float>(d));
    for (int64_t i = 0; i < n * n; ++i)
        scores.f32()[i] *= scale;
    Tensor v2 = Tensor::from_f32({n, d}, std::vector<float>(v.f32(), v.f32() + n * d));
    const Tensor composed = matmul(softmax_rows(scores), v2);

    const Tensor direct = attention_reference(q, k, v);
    CHECK(composed == Tensor::from_f32({n, d},
                                       std::vector<float>(direct.f32(),
                                                          direct.f32() + n * d)));
}

TEST_CASE("fully masked query rows are an error") {
    testutil::Rng rng(10);
    Tensor q = Tensor::zeros({1, 8, 4});
    Tensor k = Tensor::zeros({1, 8, 4});
    Tensor v = Tensor::zeros({1, 8, 4});
    testutil::fill_gaussian(q, rng);
    testutil::fill_gaussian(k, rng);
    testutil::fill_gaussian(v, rng);
    BlockMask mask = BlockMask::all_active(8, 4);
    mask.set(1, 0, false);
    mask.set(1, 1, false);
    CHECK_THROWS_AS(attention_reference(q, k, v, &mask), FullyMaskedRowError);
}

TEST_CASE("head slice round trip") {
    testutil::Rng rng(11);
    Tensor x = Tensor::zeros({3, 5, 2});
    testutil::fill_gaussian(x, rng);
    Tensor y = Tensor::zeros({3, 5, 2});
    for (int64_t h = 0; h < 3; ++h)
        copy_into_head(y, h, head_slice(x, h));
    CHECK(x == y);
}
