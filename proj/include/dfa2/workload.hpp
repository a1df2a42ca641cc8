#pragma once

#include <cstdint>
#include <vector>

#include "dfa2/plan.hpp"
#include "dfa2/tensor.hpp"

namespace dfa2 {

// Per-(layer, head) generation profile: locality is the attention decay
// length in tokens (infinity = near-global head), drift the per-timestep
// perturbation scale (0 = frozen head).
struct HeadProfile {
    double locality = 0.0;
    double drift = 0.0;
};

struct WorkloadConfig {
    AttentionDims dims;
    int64_t n_layers = 4;
    int64_t n_timesteps = 8;
    int64_t block_size = 32;
    uint64_t seed = 1234;
    // Optional explicit profiles, [L * H]; empty selects the default ladder
    // (head 0 global, head 1 strongly local, last head frozen).
    std::vector<HeadProfile> profiles;
};

std::vector<HeadProfile> default_profiles(const AttentionDims& dims,
                                          int64_t n_layers, int64_t block_size);

// Pregenerated Q/K/V streams over (timestep, layer); open loop, so plan
// choices change attention outputs but never the inputs of later layers.
class Workload {
public:
    Workload(WorkloadConfig config, std::vector<Tensor> q, std::vector<Tensor> k,
             std::vector<Tensor> v);

    const WorkloadConfig& config() const { return config_; }
    const AttentionDims& dims() const { return config_.dims; }
    int64_t n_layers() const { return config_.n_layers; }
    int64_t n_timesteps() const { return config_.n_timesteps; }
    const HeadProfile& profile(int64_t layer, int64_t head) const;

    const Tensor& q(int64_t t, int64_t layer) const { return q_[index(t, layer)]; }
    const Tensor& k(int64_t t, int64_t layer) const { return k_[index(t, layer)]; }
    const Tensor& v(int64_t t, int64_t layer) const { return v_[index(t, layer)]; }

private:
    size_t index(int64_t t, int64_t layer) const;
    WorkloadConfig config_;
    std::vector<Tensor> q_, k_, v_;
};

// Deterministic: identical (seed, config) gives bitwise-identical streams.
Workload generate(const WorkloadConfig& config);

struct RunStats {
    int64_t flops_total = 0;
    int64_t flops_dense = 0;
    double sparsity = 0.0; // 1 - flops_total/flops_dense
    double wall_seconds = 0.0;
    std::vector<Tensor> outputs; // [T * L], timestep-major
    const Tensor& output(int64_t t, int64_t layer, int64_t n_layers) const {
        return outputs.at(static_cast<size_t>(t * n_layers + layer));
    }
};

// Executes the plan per (t, layer) in forward order with a shared cache.
RunStats run_pipeline(const Workload& workload, const CompressionPlan& plan);

} // namespace dfa2
