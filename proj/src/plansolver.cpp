#include "dfa2/plansolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dfa2 {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One selectable option for a head. code orders the tie-break: methods keep
// their candidate index, Full sorts after every method.
struct Option {
    int64_t code = 0; // method index, or n_methods for Full
    double cost = 0.0;
    double infl = 0.0;
};

struct Incumbent {
    bool valid = false;
    double objective = kInf;
    double total_influence = kInf;
    std::vector<int64_t> codes;
};

bool better(double obj_a, double infl_a, const std::vector<int64_t>& codes_a,
            const Incumbent& b) {
    if (!b.valid)
        return true;
    if (obj_a != b.objective)
        return obj_a < b.objective;
    if (infl_a != b.total_influence)
        return infl_a < b.total_influence;
    return codes_a < b.codes;
}

void validate(const PlanProblem& p) {
    if (p.n_heads < 1)
        throw std::invalid_argument("plan problem needs at least one head");
    if (p.n_methods < 0 ||
        static_cast<int64_t>(p.costs.method_cost.size()) != p.n_methods)
        throw std::invalid_argument("cost model does not match method count");
    if (static_cast<int64_t>(p.influence.size()) != p.n_heads * p.n_methods)
        throw std::invalid_argument("influence grid does not match H x M");
    if (!(p.delta >= 0.0))
        throw std::invalid_argument("delta must be >= 0");
    if (!(p.coeff >= 1.0))
        throw std::invalid_argument("coeff must be >= 1");
    for (double c : p.costs.method_cost)
        if (!(c >= 0.0) || c > p.costs.full_cost)
            throw std::invalid_argument("method costs must lie in [0, full_cost]");
    for (double i : p.influence)
        if (i < 0.0)
            throw std::invalid_argument("influences must be >= 0");
}

PlanSolution all_full_solution(const PlanProblem& p) {
    PlanSolution s;
    s.choice.assign(static_cast<size_t>(p.n_heads), kFullChoice);
    double obj = 0.0;
    for (int64_t h = 0; h < p.n_heads; ++h)
        obj += p.costs.full_cost;
    s.objective = obj;
    s.total_influence = 0.0;
    return s;
}

bool eligible(double infl, double cap) {
    return std::isfinite(infl) && infl <= cap;
}

// Eligible options per head in code order; cap filter only. The brute-force
// oracle enumerates exactly these.
std::vector<std::vector<Option>> raw_options(const PlanProblem& p) {
    const double cap = selection_cap(p.coeff, p.n_heads, p.delta);
    std::vector<std::vector<Option>> heads(static_cast<size_t>(p.n_heads));
    for (int64_t h = 0; h < p.n_heads; ++h) {
        auto& opts = heads[static_cast<size_t>(h)];
        for (int64_t m = 0; m < p.n_methods; ++m) {
            const double infl = p.infl(h, m);
            if (eligible(infl, cap))
                opts.push_back({m, p.costs.method_cost[static_cast<size_t>(m)], infl});
        }
        opts.push_back({p.n_methods, p.costs.full_cost, 0.0});
    }
    return heads;
}

// Search options: raw options minus methods that no tie-break optimum can
// use (dominated in cost and influence by a lower-coded or strictly better
// method). Full is always kept as the fallback.
std::vector<std::vector<Option>> search_options(const PlanProblem& p) {
    std::vector<std::vector<Option>> heads = raw_options(p);
    for (auto& opts : heads) {
        std::vector<Option> kept;
        for (const Option& b : opts) {
            if (b.code == p.n_methods) {
                kept.push_back(b);
                continue;
            }
            bool dominated = false;
            for (const Option& a : opts) {
                if (a.code == b.code || a.code == p.n_methods)
                    continue;
                if (a.cost <= b.cost && a.infl <= b.infl &&
                    (a.cost < b.cost || a.infl < b.infl || a.code < b.code)) {
                    dominated = true;
                    break;
                }
            }
            if (!dominated)
                kept.push_back(b);
        }
        opts = std::move(kept);
    }
    return heads;
}

// Reduction frontier of one head for the LP bound: starting from the
// cheapest option, the lower convex hull toward influence 0, expressed as
// segments of (influence drop, cost rise) with non-decreasing rates.
struct Segment {
    double dw = 0.0;
    double dc = 0.0;
    double rate = 0.0;
};

struct Frontier {
    double c0 = 0.0;
    double w0 = 0.0;
    std::vector<Segment> segs;
};

Frontier build_frontier(const std::vector<Option>& opts) {
    Frontier f;
    // Cheapest start point; ties resolved toward lower influence.
    const Option* start = &opts.front();
    for (const Option& o : opts)
        if (o.cost < start->cost || (o.cost == start->cost && o.infl < start->infl))
            start = &o;
    f.c0 = start->cost;
    f.w0 = start->infl;
    if (f.w0 <= 0.0)
        return f;

    // Pareto set below the start: influence ascending, cost strictly
    // decreasing toward the start.
    std::vector<std::pair<double, double>> pts; // (infl, cost)
    for (const Option& o : opts)
        if (o.infl < f.w0 && o.cost > f.c0)
            pts.push_back({o.infl, o.cost});
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> lvl;
    double min_cost = kInf;
    for (const auto& pt : pts) {
        if (!lvl.empty() && lvl.back().first == pt.first)
            continue; // sorted: first entry per influence level is cheapest
        if (pt.second < min_cost) {
            lvl.push_back(pt);
            min_cost = pt.second;
        }
    }

    // Walk from the start toward influence 0, keeping the convex hull of
    // (infl, cost): as influence drops further, the marginal cost per unit
    // of reduction never decreases.
    std::vector<std::pair<double, double>> hull{{f.w0, f.c0}};
    for (auto it = lvl.rbegin(); it != lvl.rend(); ++it) {
        const auto [w, c] = *it;
        while (hull.size() >= 2) {
            const auto [w1, c1] = hull[hull.size() - 2];
            const auto [w2, c2] = hull[hull.size() - 1];
            // Pop the middle point when rate(p1->p2) >= rate(p2->p).
            if ((c2 - c1) * (w2 - w) >= (c - c2) * (w1 - w2))
                hull.pop_back();
            else
                break;
        }
        hull.push_back({w, c});
    }
    for (size_t i = 1; i < hull.size(); ++i) {
        const double dw = hull[i - 1].first - hull[i].first;
        const double dc = hull[i].second - hull[i - 1].second;
        f.segs.push_back({dw, dc, dc / dw});
    }
    return f;
}

// Precomputed, budget-independent state for suffix lower bounds.
struct BoundTables {
    std::vector<double> suffix_c0; // [H+1]
    std::vector<double> suffix_w0; // [H+1]
    // Per suffix: segments sorted by rate with prefix sums of dw and dc.
    std::vector<std::vector<double>> dw_prefix, dc_prefix, rates;
};

BoundTables build_bounds(const std::vector<std::vector<Option>>& heads) {
    const size_t n = heads.size();
    BoundTables t;
    t.suffix_c0.assign(n + 1, 0.0);
    t.suffix_w0.assign(n + 1, 0.0);
    t.dw_prefix.resize(n + 1);
    t.dc_prefix.resize(n + 1);
    t.rates.resize(n + 1);

    std::vector<Segment> suffix_segs;
    for (size_t h = n; h-- > 0;) {
        const Frontier f = build_frontier(heads[h]);
        t.suffix_c0[h] = t.suffix_c0[h + 1] + f.c0;
        t.suffix_w0[h] = t.suffix_w0[h + 1] + f.w0;
        suffix_segs.insert(suffix_segs.end(), f.segs.begin(), f.segs.end());
        std::vector<Segment> sorted = suffix_segs;
        std::sort(sorted.begin(), sorted.end(),
                  [](const Segment& a, const Segment& b) { return a.rate < b.rate; });
        auto& dw = t.dw_prefix[h];
        auto& dc = t.dc_prefix[h];
        auto& rt = t.rates[h];
        double w_acc = 0.0, c_acc = 0.0;
        for (const Segment& s : sorted) {
            w_acc += s.dw;
            c_acc += s.dc;
            dw.push_back(w_acc);
            dc.push_back(c_acc);
            rt.push_back(s.rate);
        }
    }
    return t;
}

// LP-relaxation lower bound on the cost of completing heads [h, H) with
// `budget` influence left.
double suffix_bound(const BoundTables& t, size_t h, double budget) {
    const double base = t.suffix_c0[h];
    const double need = t.suffix_w0[h] - budget;
    if (need <= 0.0)
        return base;
    const auto& dw = t.dw_prefix[h];
    const auto& dc = t.dc_prefix[h];
    const auto& rt = t.rates[h];
    const auto it = std::lower_bound(dw.begin(), dw.end(), need);
    const size_t idx = static_cast<size_t>(it - dw.begin());
    // Full sits at influence 0 in every head, so the segments always cover
    // the required reduction.
    const double w_before = idx == 0 ? 0.0 : dw[idx - 1];
    const double c_before = idx == 0 ? 0.0 : dc[idx - 1];
    return base + c_before + (need - w_before) * rt[idx];
}

struct Searcher {
    const PlanProblem& p;
    std::vector<std::vector<Option>> heads;
    BoundTables bounds;
    Incumbent best;
    std::vector<int64_t> codes;
    int64_t nodes = 0;

    explicit Searcher(const PlanProblem& problem)
        : p(problem), heads(search_options(problem)), bounds(build_bounds(heads)) {
        codes.assign(static_cast<size_t>(p.n_heads), 0);
    }

    void dfs(size_t h, double acc_cost, double acc_infl) {
        ++nodes;
        if (h == heads.size()) {
            if (better(acc_cost, acc_infl, codes, best)) {
                best.valid = true;
                best.objective = acc_cost;
                best.total_influence = acc_infl;
                best.codes = codes;
            }
            return;
        }
        // Options are visited in code order, so assignments are reached in
        // ascending lexicographic order and ties keep the first-found plan.
        for (const Option& o : heads[h]) {
            const double infl = acc_infl + o.infl;
            if (infl > p.delta)
                continue;
            const double cost = acc_cost + o.cost;
            const double lb = cost + suffix_bound(bounds, h + 1, p.delta - infl);
            if (best.valid && lb > best.objective)
                continue;
            codes[h] = o.code;
            dfs(h + 1, cost, infl);
        }
    }
};

PlanSolution finish(const PlanProblem& p, const Incumbent& inc, int64_t nodes) {
    if (!inc.valid)
        throw std::logic_error("no feasible plan found (all-Full is always feasible)");
    PlanSolution s;
    s.choice.resize(static_cast<size_t>(p.n_heads));
    for (int64_t h = 0; h < p.n_heads; ++h) {
        const int64_t code = inc.codes[static_cast<size_t>(h)];
        s.choice[static_cast<size_t>(h)] = code == p.n_methods ? kFullChoice : code;
    }
    s.objective = inc.objective;
    s.total_influence = inc.total_influence;
    s.nodes = nodes;
    return s;
}

} // namespace

double selection_cap(double coeff, int64_t n_heads, double delta) {
    return coeff / static_cast<double>(n_heads) * delta;
}

CostModel analytic_costs(const AttentionDims& dims, int64_t block_size,
                         const std::vector<HeadStrategy>& methods) {
    dims.validate();
    CostModel cm;
    cm.full_cost = 1.0;
    const double dense =
        static_cast<double>(dense_flops(dims.seq_len(), dims.head_dim));
    for (const HeadStrategy& s : methods) {
        switch (s.kind) {
        case StrategyKind::full:
            cm.method_cost.push_back(1.0);
            break;
        case StrategyKind::arrow: {
            const BlockMask m = build_arrow_mask({dims, block_size, s.window_blocks});
            cm.method_cost.push_back(
                static_cast<double>(flops_count(m, dims.head_dim)) / dense);
            break;
        }
        case StrategyKind::cached:
            cm.method_cost.push_back(0.0);
            break;
        }
    }
    return cm;
}

PlanSolution solve(const PlanProblem& problem) {
    validate(problem);
    if (problem.delta == 0.0)
        return all_full_solution(problem);
    Searcher s(problem);
    s.dfs(0, 0.0, 0.0);
    return finish(problem, s.best, s.nodes);
}

PlanSolution brute_force(const PlanProblem& problem) {
    validate(problem);
    if (problem.delta == 0.0)
        return all_full_solution(problem);
    const double count = std::pow(static_cast<double>(problem.n_methods + 1),
                                  static_cast<double>(problem.n_heads));
    if (count > 1e7)
        throw std::invalid_argument("instance too large for brute force");

    const auto heads = raw_options(problem);
    Incumbent best;
    std::vector<size_t> pos(static_cast<size_t>(problem.n_heads), 0);
    std::vector<int64_t> codes(static_cast<size_t>(problem.n_heads), 0);
    while (true) {
        double obj = 0.0, infl = 0.0;
        bool feasible = true;
        for (int64_t h = 0; h < problem.n_heads; ++h) {
            const Option& o =
                heads[static_cast<size_t>(h)][pos[static_cast<size_t>(h)]];
            codes[static_cast<size_t>(h)] = o.code;
            obj += o.cost;
            infl += o.infl;
            if (infl > problem.delta) {
                feasible = false;
                break;
            }
        }
        if (feasible && better(obj, infl, codes, best)) {
            best.valid = true;
            best.objective = obj;
            best.total_influence = infl;
            best.codes = codes;
        }
        // Odometer with head 0 most significant: assignments are visited in
        // ascending lexicographic code order.
        int64_t h = problem.n_heads - 1;
        while (h >= 0) {
            if (++pos[static_cast<size_t>(h)] <
                heads[static_cast<size_t>(h)].size())
                break;
            pos[static_cast<size_t>(h)] = 0;
            --h;
        }
        if (h < 0)
            break;
    }
    return finish(problem, best, 0);
}

double lp_relaxation_bound(const PlanProblem& problem) {
    validate(problem);
    if (problem.delta == 0.0)
        return all_full_solution(problem).objective;
    const auto heads = search_options(problem);
    const BoundTables t = build_bounds(heads);
    return suffix_bound(t, 0, problem.delta);
}

LayerPlan to_layer_plan(const PlanSolution& solution,
                        const std::vector<HeadStrategy>& methods) {
    LayerPlan plan;
    plan.strategies.reserve(solution.choice.size());
    for (int64_t c : solution.choice) {
        if (c == kFullChoice)
            plan.strategies.push_back(HeadStrategy::Full());
        else
            plan.strategies.push_back(methods.at(static_cast<size_t>(c)));
    }
    return plan;
}

} // namespace dfa2
