#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dfa2/dispatch.hpp"

namespace dfa2 {

// The pipeline's central output: one HeadStrategy per (timestep, layer,
// head), plus the settings that produced it.
struct CompressionPlan {
    AttentionDims dims;
    int64_t n_timesteps = 0;
    int64_t n_layers = 0;
    int64_t block_size = 0;
    double delta = 0.0;
    double coeff = 1.5;
    std::vector<int64_t> window_set;
    std::vector<LayerPlan> layers; // [T * L], timestep-major
    std::string influence_digest;  // checksum of the influence CSV

    static CompressionPlan all_full(const AttentionDims& dims, int64_t timesteps,
                                    int64_t layers, int64_t block_size);

    const LayerPlan& at(int64_t t, int64_t layer) const;
    LayerPlan& at(int64_t t, int64_t layer);
    // Schema and invariant checks; throws PlanValidationError. Covers every
    // (t, layer) exactly once, head arrays of length H, arrow entries carry
    // a window, cached never appears at t = 0.
    void validate() const;

    // Analytic aggregate over the whole run: 1 - flops_total/flops_dense,
    // the FLOPs-weighted sparsity with cached heads counting as sparsity 1.
    int64_t flops_total() const;
    int64_t flops_dense_total() const;
    double aggregate_sparsity() const;

    bool operator==(const CompressionPlan& other) const;
};

// Plan file JSON (version 1):
//   {version, dims:{T,L,H,d,n_visual,n_text,block}, delta, coeff,
//    window_set, plan:[{t, layer, heads:[{kind, window_blocks?}]}],
//    influence_digest}
std::string plan_to_json(const CompressionPlan& plan);
CompressionPlan plan_from_json(const std::string& text); // validates
void save_plan(const CompressionPlan& plan, const std::string& path);
CompressionPlan load_plan(const std::string& path);

// Method id used in influence CSVs and audits: "arrow_w<k>" or "cached".
std::string method_id(const HeadStrategy& s);

// FNV-1a 64 of a byte string, 16 hex chars; used for influence digests.
std::string fnv1a_hex(const std::string& bytes);

} // namespace dfa2
