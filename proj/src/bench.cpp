#include "dfa2/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

#include "dfa2/errors.hpp"

namespace dfa2 {
namespace {

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double max_rel_error(const Tensor& got, const Tensor& want) {
    double max_abs = 0.0, max_ref = 0.0;
    const double* w = want.f64();
    const Tensor got64 = got.to_f64();
    const double* g = got64.f64();
    for (int64_t i = 0; i < want.numel(); ++i) {
        max_abs = std::max(max_abs, std::abs(g[i] - w[i]));
        max_ref = std::max(max_ref, std::abs(w[i]));
    }
    return max_abs / (max_ref + 1e-300);
}

// [N, d] f32 tensor widened to a single-head [1, N, d] f64 tensor.
Tensor as_head3_f64(const Tensor& x, int64_t n, int64_t d) {
    Tensor t = Tensor::zeros({1, n, d}, Dtype::f64);
    const float* src = x.f32();
    double* dst = t.f64();
    for (int64_t i = 0; i < n * d; ++i)
        dst[i] = static_cast<double>(src[i]);
    return t;
}

} // namespace

std::pair<int64_t, double> find_window_for_sparsity(const AttentionDims& dims,
                                                    int64_t block_size,
                                                    double target) {
    const int64_t max_w =
        std::max<int64_t>(0, (dims.n_visual + block_size - 1) / block_size - 1);
    int64_t best_w = 0;
    double best_s = 0.0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int64_t w = 0; w <= max_w; ++w) {
        const double s = sparsity_ratio(build_arrow_mask({dims, block_size, w}));
        const double err = std::abs(s - target);
        if (err < best_err) {
            best_err = err;
            best_w = w;
            best_s = s;
        }
    }
    if (best_err > 0.02)
        throw std::invalid_argument(
            "no window reaches sparsity " + std::to_string(target) +
            " within +/-2% (closest " + std::to_string(best_s) + ")");
    return {best_w, best_s};
}

std::vector<BenchResult> run_bench(const BenchConfig& config) {
    AttentionDims dims;
    dims.n_heads = 1;
    dims.head_dim = config.head_dim;
    dims.n_visual = config.n_visual;
    dims.n_text = config.n_text;
    dims.validate();
    if (config.iters < 1 || config.warmup < 0)
        throw std::invalid_argument("need iters >= 1 and warmup >= 0");

    const int64_t n = dims.seq_len();
    const int64_t d = dims.head_dim;

    // Seeded gaussian single-head inputs.
    std::mt19937_64 eng(config.seed);
    auto uniform = [&] { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
    auto gaussian = [&] {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * uniform());
    };
    Tensor q = Tensor::zeros({n, d});
    Tensor k = Tensor::zeros({n, d});
    Tensor v = Tensor::zeros({n, d});
    for (int64_t i = 0; i < n * d; ++i) {
        q.f32()[i] = static_cast<float>(gaussian());
        k.f32()[i] = static_cast<float>(gaussian());
        v.f32()[i] = static_cast<float>(gaussian());
    }

    Tensor out = Tensor::zeros({n, d});
    auto time_ms = [](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    };

    auto dense_pass = [&] {
        dense_tiled_attention(q.f32(), k.f32(), v.f32(), out.f32(), n, d,
                              config.block, config.parallel);
    };

    std::vector<BenchResult> results;
    for (double target : config.targets) {
        const auto [w, achieved] = find_window_for_sparsity(dims, config.block, target);
        const BlockMask mask = build_arrow_mask({dims, config.block, w});

        auto sparse_pass = [&] {
            sparse_attention_forward(q.f32(), k.f32(), v.f32(), out.f32(), n, d,
                                     mask, config.parallel);
        };

        if (config.check_outputs) {
            sparse_pass();
            const Tensor oracle =
                attention_reference(as_head3_f64(q, n, d), as_head3_f64(k, n, d),
                                    as_head3_f64(v, n, d), &mask);
            if (max_rel_error(out, oracle) > 1e-5)
                throw OracleError(
                    "sparse benchmark path failed the 1e-5 oracle check");
        }

        // Dense and sparse samples interleave so scheduler noise in any time
        // window lands on both paths.
        for (int i = 0; i < config.warmup; ++i) {
            dense_pass();
            sparse_pass();
        }
        std::vector<double> dense_samples, sparse_samples;
        dense_samples.reserve(static_cast<size_t>(config.iters));
        sparse_samples.reserve(static_cast<size_t>(config.iters));
        for (int i = 0; i < config.iters; ++i) {
            dense_samples.push_back(time_ms(dense_pass));
            sparse_samples.push_back(time_ms(sparse_pass));
        }
        const double dense_ms = median(dense_samples);
        const double sparse_ms = median(sparse_samples);

        BenchResult r;
        r.n_visual = config.n_visual;
        r.n_text = config.n_text;
        r.head_dim = config.head_dim;
        r.block = config.block;
        r.target_sparsity = target;
        r.achieved_sparsity = achieved;
        r.window = w;
        r.dense_ms = dense_ms;
        r.sparse_ms = sparse_ms;
        r.speedup = dense_ms / sparse_ms;
        r.ideal = 1.0 / (1.0 - achieved);
        results.push_back(r);
    }
    return results;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchResult>& results) {
    out << "n_visual,n_text,head_dim,block,target_sparsity,achieved_sparsity,"
           "dense_ms,sparse_ms,speedup,ideal\n";
    char buf[256];
    for (const BenchResult& r : results) {
        std::snprintf(buf, sizeof buf,
                      "%lld,%lld,%lld,%lld,%.4f,%.6f,%.4f,%.4f,%.4f,%.4f\n",
                      static_cast<long long>(r.n_visual),
                      static_cast<long long>(r.n_text),
                      static_cast<long long>(r.head_dim),
                      static_cast<long long>(r.block), r.target_sparsity,
                      r.achieved_sparsity, r.dense_ms, r.sparse_ms, r.speedup,
                      r.ideal);
        out << buf;
    }
}

} // namespace dfa2
