#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dfa2/arrow.hpp"

namespace dfa2 {

struct BenchConfig {
    int64_t n_visual = 4096;
    int64_t n_text = 512;
    int64_t head_dim = 64;
    int64_t block = 128;
    std::vector<double> targets = {0.25, 0.5, 0.75};
    int warmup = 3;
    int iters = 20;
    bool parallel = false;
    bool check_outputs = true; // sparse result vs f64 oracle before timing
    uint64_t seed = 2024;
};

struct BenchResult {
    int64_t n_visual = 0;
    int64_t n_text = 0;
    int64_t head_dim = 0;
    int64_t block = 0;
    double target_sparsity = 0.0;
    double achieved_sparsity = 0.0;
    int64_t window = 0;
    double dense_ms = 0.0;
    double sparse_ms = 0.0;
    double speedup = 0.0; // dense_ms / sparse_ms
    double ideal = 0.0;   // 1 / (1 - sparsity)
};

// Finds the window radius whose arrow mask lands closest to the target
// sparsity; throws if no window is within +/- 0.02.
std::pair<int64_t, double> find_window_for_sparsity(const AttentionDims& dims,
                                                    int64_t block_size,
                                                    double target);

// Dense tiled attention vs arrow block-sparse attention on one seeded head;
// wall-clock medians over `iters` warm iterations after `warmup`.
std::vector<BenchResult> run_bench(const BenchConfig& config);

// CSV schema:
// n_visual,n_text,head_dim,block,target_sparsity,achieved_sparsity,
// dense_ms,sparse_ms,speedup,ideal
void write_bench_csv(std::ostream& out, const std::vector<BenchResult>& results);

} // namespace dfa2
