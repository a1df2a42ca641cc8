#include "dfa2/calibrate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "dfa2/plansolver.hpp"

namespace dfa2 {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double sum_sq_diff(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    const int64_t n = a.numel();
    if (a.dtype() == Dtype::f32) {
        const float* pa = a.f32();
        const float* pb = b.f32();
        for (int64_t i = 0; i < n; ++i) {
            const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
            acc += d * d;
        }
    } else {
        const double* pa = a.f64();
        const double* pb = b.f64();
        for (int64_t i = 0; i < n; ++i) {
            const double d = pa[i] - pb[i];
            acc += d * d;
        }
    }
    return acc;
}

double mean_of(const Tensor& x) {
    double acc = 0.0;
    const int64_t n = x.numel();
    if (x.dtype() == Dtype::f32) {
        const float* p = x.f32();
        for (int64_t i = 0; i < n; ++i)
            acc += static_cast<double>(p[i]);
    } else {
        const double* p = x.f64();
        for (int64_t i = 0; i < n; ++i)
            acc += p[i];
    }
    return acc / static_cast<double>(n);
}

double sum_sq_dev(const Tensor& x, double mean) {
    double acc = 0.0;
    const int64_t n = x.numel();
    if (x.dtype() == Dtype::f32) {
        const float* p = x.f32();
        for (int64_t i = 0; i < n; ++i) {
            const double d = static_cast<double>(p[i]) - mean;
            acc += d * d;
        }
    } else {
        const double* p = x.f64();
        for (int64_t i = 0; i < n; ++i) {
            const double d = p[i] - mean;
            acc += d * d;
        }
    }
    return acc;
}

} // namespace

double rse(const Tensor& y_m, const Tensor& y_o, RseMode mode) {
    if (y_m.shape() != y_o.shape() || y_m.dtype() != y_o.dtype())
        throw ShapeError("rse operands must share shape and dtype");
    if (y_m.numel() == 0)
        throw ShapeError("rse needs at least one element");
    const double mean = mean_of(y_o);
    const double denom = sum_sq_dev(y_o, mean);
    if (denom <= 0.0)
        throw DegenerateReferenceError("reference output has zero variance");
    const double num = mode == RseMode::standard ? sum_sq_diff(y_m, y_o)
                                                 : sum_sq_dev(y_m, mean);
    return num / denom;
}

std::vector<MethodCandidate> make_candidates(const std::vector<int64_t>& windows,
                                             bool include_cached) {
    std::vector<MethodCandidate> methods;
    for (int64_t w : windows) {
        if (w < 0)
            throw ShapeError("window radii must be >= 0");
        HeadStrategy s = HeadStrategy::Arrow(w);
        methods.push_back({method_id(s), s});
    }
    if (include_cached)
        methods.push_back({method_id(HeadStrategy::Cached()), HeadStrategy::Cached()});
    if (methods.empty())
        throw ShapeError("candidate set must be nonempty");
    return methods;
}

InfluenceTable::InfluenceTable(int64_t t, int64_t layers, int64_t heads,
                               std::vector<std::string> method_ids)
    : t_(t), layers_(layers), heads_(heads), method_ids_(std::move(method_ids)) {
    values_.assign(static_cast<size_t>(t_ * layers_ * heads_ * n_methods()), kNan);
}

size_t InfluenceTable::index(int64_t t, int64_t layer, int64_t head,
                             int64_t method) const {
    if (t < 0 || t >= t_ || layer < 0 || layer >= layers_ || head < 0 ||
        head >= heads_ || method < 0 || method >= n_methods())
        throw ShapeError("influence index out of range");
    return static_cast<size_t>(
        ((t * layers_ + layer) * heads_ + head) * n_methods() + method);
}

double InfluenceTable::get(int64_t t, int64_t layer, int64_t head,
                           int64_t method) const {
    return values_[index(t, layer, head, method)];
}

void InfluenceTable::set(int64_t t, int64_t layer, int64_t head, int64_t method,
                         double v) {
    values_[index(t, layer, head, method)] = v;
}

bool InfluenceTable::measured(int64_t t, int64_t layer, int64_t head,
                              int64_t method) const {
    return !std::isnan(values_[index(t, layer, head, method)]);
}

void InfluenceTable::write_csv(std::ostream& out) const {
    out << "t,layer,head,method,influence\n";
    char buf[64];
    for (int64_t t = 0; t < t_; ++t)
        for (int64_t l = 0; l < layers_; ++l)
            for (int64_t h = 0; h < heads_; ++h)
                for (int64_t m = 0; m < n_methods(); ++m) {
                    const double v = get(t, l, h, m);
                    if (std::isnan(v))
                        continue;
                    std::snprintf(buf, sizeof buf, "%.17g", v);
                    out << t << ',' << l << ',' << h << ','
                        << method_ids_[static_cast<size_t>(m)] << ',' << buf << '\n';
                }
}

std::string InfluenceTable::to_csv() const {
    std::ostringstream ss;
    write_csv(ss);
    return ss.str();
}

InfluenceTable parse_influence_csv(std::istream& in, int64_t t, int64_t layers,
                                   int64_t heads,
                                   const std::vector<std::string>& method_ids) {
    InfluenceTable table(t, layers, heads, method_ids);
    std::map<std::string, int64_t> by_id;
    for (size_t m = 0; m < method_ids.size(); ++m)
        by_id[method_ids[m]] = static_cast<int64_t>(m);

    std::string line;
    if (!std::getline(in, line) || line != "t,layer,head,method,influence")
        throw IoError("influence CSV header mismatch");
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::istringstream ls(line);
        std::string tok;
        int64_t vt, vl, vh;
        std::string method;
        double value;
        std::getline(ls, tok, ',');
        vt = std::stoll(tok);
        std::getline(ls, tok, ',');
        vl = std::stoll(tok);
        std::getline(ls, tok, ',');
        vh = std::stoll(tok);
        std::getline(ls, method, ',');
        std::getline(ls, tok, ',');
        value = std::stod(tok);
        const auto it = by_id.find(method);
        if (it == by_id.end())
            throw IoError("unknown method id in influence CSV: " + method);
        table.set(vt, vl, vh, it->second, value);
    }
    return table;
}

LayerInfluence influence_for_layer(const Tensor& q, const Tensor& k,
                                   const Tensor& v,
                                   const std::vector<MethodCandidate>& methods,
                                   const HeadCache& cache, int64_t layer,
                                   int64_t t, const AttentionDims& dims,
                                   int64_t block_size, RseMode mode,
                                   CalibrationStats* stats) {
    if (methods.empty())
        throw ShapeError("candidate set must be nonempty");
    const int64_t n_heads = dims.n_heads;
    const int64_t m_count = static_cast<int64_t>(methods.size());

    LayerInfluence out;
    out.original = attention_reference(q, k, v);
    if (stats)
        ++stats->attention_evals;

    out.method_outputs.resize(static_cast<size_t>(m_count));
    out.influence.assign(static_cast<size_t>(n_heads * m_count), kInf);

    const int64_t n = dims.seq_len();
    const int64_t d = dims.head_dim;

    for (int64_t m = 0; m < m_count; ++m) {
        const MethodCandidate& cand = methods[static_cast<size_t>(m)];
        // One evaluation per candidate per layer, so the calibration cost is
        // exactly (|M|+1) evaluations here and nothing else.
        if (stats)
            ++stats->attention_evals;
        if (cand.strategy.kind == StrategyKind::cached) {
            if (t == 0)
                continue; // ineligible: the cache cannot hold entries yet
            // Heads without a slot stay ineligible (+inf influence).
            Tensor assembled = Tensor::zeros(q.shape(), Dtype::f32);
            for (int64_t h = 0; h < n_heads; ++h) {
                if (!cache.has(layer, h))
                    continue;
                copy_into_head(assembled, h, cache.fetch(layer, h));
                out.influence[static_cast<size_t>(h * m_count + m)] =
                    rse(head_slice(assembled, h), head_slice(out.original, h), mode);
            }
            out.method_outputs[static_cast<size_t>(m)] = std::move(assembled);
            continue;
        }

        // Arrow candidate: one block-sparse pass over every head.
        const BlockMask mask =
            build_arrow_mask({dims, block_size, cand.strategy.window_blocks});
        Tensor compressed = Tensor::zeros(q.shape(), Dtype::f32);
        for (int64_t h = 0; h < n_heads; ++h) {
            const int64_t off = h * n * d;
            sparse_attention_forward(q.f32() + off, k.f32() + off, v.f32() + off,
                                     compressed.f32() + off, n, d, mask);
        }
        for (int64_t h = 0; h < n_heads; ++h)
            out.influence[static_cast<size_t>(h * m_count + m)] =
                rse(head_slice(compressed, h), head_slice(out.original, h), mode);
        out.method_outputs[static_cast<size_t>(m)] = std::move(compressed);
    }
    return out;
}

CalibrationResult calibrate_model(const Workload& workload,
                                  const CalibrationConfig& config) {
    if (config.methods.empty())
        throw ShapeError("candidate set must be nonempty");
    if (!(config.delta >= 0.0))
        throw ShapeError("delta must be >= 0");
    if (!(config.coeff >= 1.0))
        throw ShapeError("coeff must be >= 1");

    const auto start = std::chrono::steady_clock::now();
    const WorkloadConfig& cfg = workload.config();
    const int64_t t_count = cfg.n_timesteps;
    const int64_t l_count = cfg.n_layers;
    const int64_t h_count = cfg.dims.n_heads;
    const int64_t m_count = static_cast<int64_t>(config.methods.size());

    std::vector<HeadStrategy> method_strategies;
    std::vector<std::string> method_ids;
    std::vector<int64_t> windows;
    for (const MethodCandidate& c : config.methods) {
        method_strategies.push_back(c.strategy);
        method_ids.push_back(c.id);
        if (c.strategy.kind == StrategyKind::arrow)
            windows.push_back(c.strategy.window_blocks);
    }
    const CostModel costs =
        analytic_costs(cfg.dims, cfg.block_size, method_strategies);

    CalibrationResult result;
    result.plan.dims = cfg.dims;
    result.plan.n_timesteps = t_count;
    result.plan.n_layers = l_count;
    result.plan.block_size = cfg.block_size;
    result.plan.delta = config.delta;
    result.plan.coeff = config.coeff;
    result.plan.window_set = windows;
    result.plan.layers.assign(static_cast<size_t>(t_count * l_count), LayerPlan{});
    result.influences = InfluenceTable(t_count, l_count, h_count, method_ids);
    result.stats.budget_spent.assign(static_cast<size_t>(t_count * l_count), 0.0);
    result.stats.objective.assign(static_cast<size_t>(t_count * l_count), 0.0);

    HeadCache cache;
    for (int64_t t = 0; t < t_count; ++t)
        for (int64_t l = 0; l < l_count; ++l) {
            const LayerInfluence li = influence_for_layer(
                workload.q(t, l), workload.k(t, l), workload.v(t, l),
                config.methods, cache, l, t, cfg.dims, cfg.block_size,
                config.rse_mode, &result.stats);

            for (int64_t h = 0; h < h_count; ++h)
                for (int64_t m = 0; m < m_count; ++m) {
                    const double v =
                        li.influence[static_cast<size_t>(h * m_count + m)];
                    if (std::isfinite(v))
                        result.influences.set(t, l, h, m, v);
                }

            PlanProblem problem;
            problem.n_heads = h_count;
            problem.n_methods = m_count;
            problem.influence = li.influence;
            problem.costs = costs;
            problem.delta = config.delta;
            problem.coeff = config.coeff;
            const PlanSolution sol = solve(problem);

            const size_t slot = static_cast<size_t>(t * l_count + l);
            result.stats.budget_spent[slot] = sol.total_influence;
            result.stats.objective[slot] = sol.objective;
            const LayerPlan lp = to_layer_plan(sol, method_strategies);
            result.plan.layers[slot] = lp;

            // Apply: splice per-head outputs from the measurement passes (no
            // extra attention evaluation) and commit computed heads.
            for (int64_t h = 0; h < h_count; ++h) {
                const int64_t choice = sol.choice[static_cast<size_t>(h)];
                if (choice == kFullChoice) {
                    cache.store(l, h, head_slice(li.original, h), t);
                } else if (method_strategies[static_cast<size_t>(choice)].kind ==
                           StrategyKind::arrow) {
                    cache.store(
                        l, h,
                        head_slice(li.method_outputs[static_cast<size_t>(choice)], h),
                        t);
                }
                // Cached heads do not refresh the slot.
            }
        }

    result.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return result;
}

int64_t audit_plan_constraints(const CompressionPlan& plan,
                               const InfluenceTable& influences) {
    plan.validate();
    std::map<std::string, int64_t> by_id;
    for (size_t m = 0; m < influences.method_ids().size(); ++m)
        by_id[influences.method_ids()[m]] = static_cast<int64_t>(m);

    const double cap = selection_cap(plan.coeff, plan.dims.n_heads, plan.delta);
    int64_t violations = 0;
    for (int64_t t = 0; t < plan.n_timesteps; ++t)
        for (int64_t l = 0; l < plan.n_layers; ++l) {
            double spent = 0.0;
            for (int64_t h = 0; h < plan.dims.n_heads; ++h) {
                const HeadStrategy& s =
                    plan.at(t, l).strategies[static_cast<size_t>(h)];
                if (s.kind == StrategyKind::full)
                    continue;
                const auto it = by_id.find(method_id(s));
                if (it == by_id.end() ||
                    !influences.measured(t, l, h, it->second)) {
                    ++violations; // selected a method with no measured influence
                    continue;
                }
                const double v = influences.get(t, l, h, it->second);
                spent += v;
                if (v > cap)
                    ++violations;
            }
            if (spent > plan.delta)
                ++violations;
        }
    return violations;
}

} // namespace dfa2
