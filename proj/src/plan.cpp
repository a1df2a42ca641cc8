#include "dfa2/plan.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dfa2 {

using nlohmann::json;

CompressionPlan CompressionPlan::all_full(const AttentionDims& dims,
                                          int64_t timesteps, int64_t layers,
                                          int64_t block_size) {
    CompressionPlan p;
    p.dims = dims;
    p.n_timesteps = timesteps;
    p.n_layers = layers;
    p.block_size = block_size;
    p.layers.assign(static_cast<size_t>(timesteps * layers),
                    LayerPlan::all_full(dims.n_heads));
    return p;
}

const LayerPlan& CompressionPlan::at(int64_t t, int64_t layer) const {
    return layers.at(static_cast<size_t>(t * n_layers + layer));
}

LayerPlan& CompressionPlan::at(int64_t t, int64_t layer) {
    return layers.at(static_cast<size_t>(t * n_layers + layer));
}

void CompressionPlan::validate() const {
    dims.validate();
    if (n_timesteps < 1 || n_layers < 1 || block_size < 1)
        throw PlanValidationError("plan needs T >= 1, L >= 1, block >= 1");
    if (!(delta >= 0.0))
        throw PlanValidationError("delta must be >= 0");
    if (!(coeff >= 1.0))
        throw PlanValidationError("coeff must be >= 1");
    if (static_cast<int64_t>(layers.size()) != n_timesteps * n_layers)
        throw PlanValidationError("plan must cover every (t, layer) exactly once");
    for (int64_t t = 0; t < n_timesteps; ++t)
        for (int64_t l = 0; l < n_layers; ++l) {
            const LayerPlan& lp = at(t, l);
            if (lp.n_heads() != dims.n_heads)
                throw PlanValidationError("head array length must equal H");
            for (const HeadStrategy& s : lp.strategies) {
                if (s.kind == StrategyKind::arrow && s.window_blocks < 0)
                    throw PlanValidationError("arrow window must be >= 0");
                if (s.kind == StrategyKind::cached && t == 0)
                    throw PlanValidationError(
                        "cached must not appear at the first timestep");
            }
        }
}

int64_t CompressionPlan::flops_total() const {
    int64_t total = 0;
    for (const LayerPlan& lp : layers)
        total += plan_flops(lp, dims, block_size);
    return total;
}

int64_t CompressionPlan::flops_dense_total() const {
    return n_timesteps * n_layers * dims.n_heads *
           dense_flops(dims.seq_len(), dims.head_dim);
}

double CompressionPlan::aggregate_sparsity() const {
    return 1.0 - static_cast<double>(flops_total()) /
                     static_cast<double>(flops_dense_total());
}

bool CompressionPlan::operator==(const CompressionPlan& other) const {
    return dims.n_heads == other.dims.n_heads &&
           dims.head_dim == other.dims.head_dim &&
           dims.n_visual == other.dims.n_visual &&
           dims.n_text == other.dims.n_text && dims.order == other.dims.order &&
           n_timesteps == other.n_timesteps && n_layers == other.n_layers &&
           block_size == other.block_size && delta == other.delta &&
           coeff == other.coeff && window_set == other.window_set &&
           layers == other.layers && influence_digest == other.influence_digest;
}

std::string method_id(const HeadStrategy& s) {
    switch (s.kind) {
    case StrategyKind::full:
        return "full";
    case StrategyKind::arrow:
        return "arrow_w" + std::to_string(s.window_blocks);
    case StrategyKind::cached:
        return "cached";
    }
    return "full";
}

std::string fnv1a_hex(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string plan_to_json(const CompressionPlan& plan) {
    json j;
    j["version"] = 1;
    j["dims"] = {{"T", plan.n_timesteps},
                 {"L", plan.n_layers},
                 {"H", plan.dims.n_heads},
                 {"d", plan.dims.head_dim},
                 {"n_visual", plan.dims.n_visual},
                 {"n_text", plan.dims.n_text},
                 {"block", plan.block_size}};
    j["delta"] = plan.delta;
    j["coeff"] = plan.coeff;
    j["window_set"] = plan.window_set;
    json entries = json::array();
    for (int64_t t = 0; t < plan.n_timesteps; ++t)
        for (int64_t l = 0; l < plan.n_layers; ++l) {
            json heads = json::array();
            for (const HeadStrategy& s : plan.at(t, l).strategies) {
                json h;
                switch (s.kind) {
                case StrategyKind::full:
                    h["kind"] = "full";
                    break;
                case StrategyKind::arrow:
                    h["kind"] = "arrow";
                    h["window_blocks"] = s.window_blocks;
                    break;
                case StrategyKind::cached:
                    h["kind"] = "cached";
                    break;
                }
                heads.push_back(std::move(h));
            }
            entries.push_back({{"t", t}, {"layer", l}, {"heads", std::move(heads)}});
        }
    j["plan"] = std::move(entries);
    j["influence_digest"] = plan.influence_digest;
    return j.dump(2) + "\n";
}

CompressionPlan plan_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw PlanValidationError(std::string("malformed plan JSON: ") + e.what());
    }
    try {
        if (j.at("version").get<int64_t>() != 1)
            throw PlanValidationError("unsupported plan version");
        CompressionPlan p;
        const json& d = j.at("dims");
        p.n_timesteps = d.at("T").get<int64_t>();
        p.n_layers = d.at("L").get<int64_t>();
        p.dims.n_heads = d.at("H").get<int64_t>();
        p.dims.head_dim = d.at("d").get<int64_t>();
        p.dims.n_visual = d.at("n_visual").get<int64_t>();
        p.dims.n_text = d.at("n_text").get<int64_t>();
        p.block_size = d.at("block").get<int64_t>();
        p.delta = j.at("delta").get<double>();
        p.coeff = j.at("coeff").get<double>();
        p.window_set = j.at("window_set").get<std::vector<int64_t>>();
        p.influence_digest = j.at("influence_digest").get<std::string>();

        if (p.n_timesteps < 1 || p.n_layers < 1)
            throw PlanValidationError("plan needs T >= 1 and L >= 1");
        p.layers.assign(static_cast<size_t>(p.n_timesteps * p.n_layers), LayerPlan{});
        std::vector<uint8_t> seen(p.layers.size(), 0);
        for (const json& e : j.at("plan")) {
            const int64_t t = e.at("t").get<int64_t>();
            const int64_t l = e.at("layer").get<int64_t>();
            if (t < 0 || t >= p.n_timesteps || l < 0 || l >= p.n_layers)
                throw PlanValidationError("plan entry out of range");
            const size_t idx = static_cast<size_t>(t * p.n_layers + l);
            if (seen[idx])
                throw PlanValidationError("duplicate plan entry");
            seen[idx] = 1;
            LayerPlan lp;
            for (const json& h : e.at("heads")) {
                const std::string kind = h.at("kind").get<std::string>();
                if (kind == "full") {
                    lp.strategies.push_back(HeadStrategy::Full());
                } else if (kind == "arrow") {
                    lp.strategies.push_back(
                        HeadStrategy::Arrow(h.at("window_blocks").get<int64_t>()));
                } else if (kind == "cached") {
                    lp.strategies.push_back(HeadStrategy::Cached());
                } else {
                    throw PlanValidationError("unknown strategy kind: " + kind);
                }
            }
            p.layers[idx] = std::move(lp);
        }
        for (uint8_t s : seen)
            if (!s)
                throw PlanValidationError("plan must cover every (t, layer)");
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw PlanValidationError(std::string("plan schema violation: ") + e.what());
    }
}

void save_plan(const CompressionPlan& plan, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << plan_to_json(plan);
    if (!out)
        throw IoError("failed writing " + path);
}

CompressionPlan load_plan(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return plan_from_json(ss.str());
}

} // namespace dfa2
