#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dfa2/cache.hpp"
#include "dfa2/plan.hpp"
#include "dfa2/workload.hpp"

namespace dfa2 {

// Relative squared error of a compressed head output against the original.
// standard: sum((y_m - y_o)^2) / sum((y_o - mean(y_o))^2), zero iff the
// outputs match. literal keeps sum((y_m - mean(y_o))^2) in the numerator for
// comparison; it reports nonzero error even for identical outputs.
enum class RseMode { standard, literal };

double rse(const Tensor& y_m, const Tensor& y_o, RseMode mode = RseMode::standard);

// A compression method candidate: Arrow(w) for each configured window, or
// Cached. Cached is ineligible at t = 0 and wherever its slot is empty.
struct MethodCandidate {
    std::string id;
    HeadStrategy strategy;
};

std::vector<MethodCandidate> make_candidates(const std::vector<int64_t>& windows,
                                             bool include_cached = true);

// Measured I(t, layer, head, method); NaN marks unmeasured (ineligible)
// entries which never appear in the CSV.
class InfluenceTable {
public:
    InfluenceTable() = default;
    InfluenceTable(int64_t t, int64_t layers, int64_t heads,
                   std::vector<std::string> method_ids);

    double get(int64_t t, int64_t layer, int64_t head, int64_t method) const;
    void set(int64_t t, int64_t layer, int64_t head, int64_t method, double v);
    bool measured(int64_t t, int64_t layer, int64_t head, int64_t method) const;
    const std::vector<std::string>& method_ids() const { return method_ids_; }
    int64_t n_methods() const { return static_cast<int64_t>(method_ids_.size()); }

    // CSV with header t,layer,head,method,influence; values printed with 17
    // significant digits so they round-trip exactly.
    void write_csv(std::ostream& out) const;
    std::string to_csv() const;

private:
    size_t index(int64_t t, int64_t layer, int64_t head, int64_t method) const;
    int64_t t_ = 0, layers_ = 0, heads_ = 0;
    std::vector<std::string> method_ids_;
    std::vector<double> values_;
};

// Parsed back from CSV for audits.
InfluenceTable parse_influence_csv(std::istream& in, int64_t t, int64_t layers,
                                   int64_t heads,
                                   const std::vector<std::string>& method_ids);

struct CalibrationStats {
    int64_t attention_evals = 0; // layer-level method-output evaluations
    double wall_seconds = 0.0;
    std::vector<double> budget_spent; // [T * L], sum of selected influences
    std::vector<double> objective;    // [T * L], solver objective
};

// Influence measurement for one (timestep, layer): the original output, one
// output per candidate, and the RSE grid. Exactly 1 + |M| attention
// evaluations; candidate outputs are kept so the applied plan can be
// assembled without recomputing.
struct LayerInfluence {
    Tensor original;                    // [H, N, d]
    std::vector<Tensor> method_outputs; // [M]; unset where ineligible
    std::vector<double> influence;      // [H * M]; +inf where ineligible
};

LayerInfluence influence_for_layer(const Tensor& q, const Tensor& k,
                                   const Tensor& v,
                                   const std::vector<MethodCandidate>& methods,
                                   const HeadCache& cache, int64_t layer,
                                   int64_t t, const AttentionDims& dims,
                                   int64_t block_size, RseMode mode,
                                   CalibrationStats* stats);

struct CalibrationConfig {
    std::vector<MethodCandidate> methods;
    double delta = 0.4;
    double coeff = 1.5;
    RseMode rse_mode = RseMode::standard;
};

struct CalibrationResult {
    CompressionPlan plan;
    InfluenceTable influences;
    CalibrationStats stats;
};

// Progressive search: for each (t, layer) in forward order, measure
// influences on the already-compressed stream, solve the layer's selection
// problem, splice the chosen outputs together from the measurement passes
// and commit computed heads to the cache, then move on.
CalibrationResult calibrate_model(const Workload& workload,
                                  const CalibrationConfig& config);

// Audit: every layer's selected influences must satisfy the budget and the
// per-selection cap. Returns the number of violations (0 for any plan the
// calibrator emits).
int64_t audit_plan_constraints(const CompressionPlan& plan,
                               const InfluenceTable& influences);

} // namespace dfa2
