#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfa2/dispatch.hpp"

namespace dfa2 {

// Latency model for one head: full_cost for an unassigned (Full) head and
// one cost per candidate method. A candidate never costs more than Full;
// Cached costs 0.
struct CostModel {
    double full_cost = 1.0;
    std::vector<double> method_cost;
};

// Analytic costs: full_cost = 1, Arrow(w) = active fraction of its mask,
// Cached = 0.
CostModel analytic_costs(const AttentionDims& dims, int64_t block_size,
                         const std::vector<HeadStrategy>& methods);

// One layer-level selection problem: per head pick at most one method,
// minimize total latency subject to sum of selected influences <= delta and
// the per-selection cap. Influence entries of +inf mark ineligible
// candidates (e.g. Cached before the cache holds an entry).
struct PlanProblem {
    int64_t n_heads = 0;
    int64_t n_methods = 0;
    std::vector<double> influence; // [n_heads * n_methods], row-major by head
    CostModel costs;
    double delta = 0.0;
    double coeff = 1.5;

    double infl(int64_t h, int64_t m) const {
        return influence[static_cast<size_t>(h * n_methods + m)];
    }
};

// Per-selection cap (c/n)*delta. One shared expression so the solver and
// every audit compare bit-identical values.
double selection_cap(double coeff, int64_t n_heads, double delta);

inline constexpr int64_t kFullChoice = -1;

struct PlanSolution {
    std::vector<int64_t> choice; // per head: kFullChoice or a method index
    double objective = 0.0;
    double total_influence = 0.0;
    int64_t nodes = 0; // search nodes (solve only)
};

// Exact optimum via depth-first branch-and-bound over heads with an
// LP-relaxation (fractional multiple-choice knapsack) lower bound.
// Deterministic tie-break among optimal assignments: lower total selected
// influence, then—at the lowest head index where two plans differ—the
// lower method index, with Full ordered after every method. delta == 0
// admits no selections at all, so the plan is all-Full even for
// zero-influence candidates.
PlanSolution solve(const PlanProblem& problem);

// Exhaustive enumeration under the identical tie-break; test oracle.
// Requires (n_methods+1)^n_heads <= 1e7.
PlanSolution brute_force(const PlanProblem& problem);

// LP relaxation optimum over the whole problem; never exceeds the integer
// optimum. Exposed for diagnostics and bound tests.
double lp_relaxation_bound(const PlanProblem& problem);

// JSON form for regression corpora; numeric values round-trip exactly.
std::string plan_problem_to_json(const PlanProblem& problem);
PlanProblem plan_problem_from_json(const std::string& text);

// Maps a solution back onto per-head strategies.
LayerPlan to_layer_plan(const PlanSolution& solution,
                        const std::vector<HeadStrategy>& methods);

} // namespace dfa2
