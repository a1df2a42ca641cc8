#include "dfa2/workload.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "dfa2/cache.hpp"
#include "dfa2/dispatch.hpp"

namespace dfa2 {
namespace {

constexpr double kPi = 3.14159265358979323846;

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Stream seed derived from (base, layer, head, timestep, tag) so generation
// order never matters.
uint64_t derive_seed(uint64_t base, uint64_t l, uint64_t h, uint64_t t,
                     uint64_t tag) {
    uint64_t s = splitmix64(base ^ 0x9e3779b97f4a7c15ull);
    s = splitmix64(s ^ (l * 0xff51afd7ed558ccdull));
    s = splitmix64(s ^ (h * 0xc4ceb9fe1a85ec53ull));
    s = splitmix64(s ^ (t * 0xd6e8feb86659fd93ull));
    return splitmix64(s ^ tag);
}

// Deterministic gaussians: mt19937_64 is pinned by the standard, and the
// Box-Muller transform avoids the implementation-defined stdlib
// distributions.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Signal scales. The positional gain makes local heads clearly banded after
// the 1/sqrt(d) attention scale while the per-token noise keeps rows
// distinct; text rows carry no positional component.
constexpr double kPositionalGain = 6.0;
constexpr double kVisualNoise = 0.3;
constexpr double kTextGain = 3.0;

} // namespace

std::vector<HeadProfile> default_profiles(const AttentionDims& dims,
                                          int64_t n_layers, int64_t block_size) {
    const double b = static_cast<double>(block_size);
    const double inf = std::numeric_limits<double>::infinity();
    // Locality ladder for heads 2..H-1; heads 0 and 1 pin the per-layer
    // extremes (one near-global, one strongly local head per layer).
    const double locality_ladder[] = {b / 2, b, 2 * b, 4 * b, 8 * b, inf};
    const double drift_ladder[] = {0.01, 0.02, 0.04, 0.07, 0.11, 0.16, 0.22};

    std::vector<HeadProfile> profiles;
    profiles.reserve(static_cast<size_t>(n_layers * dims.n_heads));
    for (int64_t l = 0; l < n_layers; ++l)
        for (int64_t h = 0; h < dims.n_heads; ++h) {
            HeadProfile p;
            if (h == 0)
                p.locality = inf;
            else if (h == 1)
                p.locality = b / 4;
            else
                p.locality = locality_ladder[(h - 2 + l) % 6];
            if (h == dims.n_heads - 1)
                p.drift = 0.0; // frozen head: full temporal redundancy
            else
                p.drift = drift_ladder[(h + l) % 7];
            profiles.push_back(p);
        }
    return profiles;
}

Workload::Workload(WorkloadConfig config, std::vector<Tensor> q,
                   std::vector<Tensor> k, std::vector<Tensor> v)
    : config_(std::move(config)), q_(std::move(q)), k_(std::move(k)),
      v_(std::move(v)) {}

const HeadProfile& Workload::profile(int64_t layer, int64_t head) const {
    return config_.profiles.at(
        static_cast<size_t>(layer * config_.dims.n_heads + head));
}

size_t Workload::index(int64_t t, int64_t layer) const {
    if (t < 0 || t >= config_.n_timesteps || layer < 0 || layer >= config_.n_layers)
        throw ShapeError("timestep or layer out of range");
    return static_cast<size_t>(t * config_.n_layers + layer);
}

Workload generate(const WorkloadConfig& config) {
    WorkloadConfig cfg = config;
    cfg.dims.validate();
    if (cfg.n_layers < 1 || cfg.n_timesteps < 1 || cfg.block_size < 1)
        throw ShapeError("need n_layers >= 1, n_timesteps >= 1, block >= 1");
    if (cfg.profiles.empty())
        cfg.profiles = default_profiles(cfg.dims, cfg.n_layers, cfg.block_size);
    if (static_cast<int64_t>(cfg.profiles.size()) !=
        cfg.n_layers * cfg.dims.n_heads)
        throw ShapeError("profiles must cover every (layer, head)");

    const int64_t d = cfg.dims.head_dim;
    const int64_t n = cfg.dims.seq_len();
    const int64_t h_count = cfg.dims.n_heads;
    const int64_t text_lo = cfg.dims.text_begin();
    const int64_t text_hi = cfg.dims.text_end();
    const size_t slots = static_cast<size_t>(cfg.n_timesteps * cfg.n_layers);

    std::vector<Tensor> qs(slots), ks(slots), vs(slots);
    for (size_t i = 0; i < slots; ++i) {
        qs[i] = Tensor::zeros({h_count, n, d});
        ks[i] = Tensor::zeros({h_count, n, d});
        vs[i] = Tensor::zeros({h_count, n, d});
    }

    const double feat_scale = std::sqrt(2.0 / static_cast<double>(d));
    std::vector<double> omega(static_cast<size_t>(d));
    std::vector<double> phase(static_cast<size_t>(d));

    for (int64_t l = 0; l < cfg.n_layers; ++l) {
        for (int64_t h = 0; h < h_count; ++h) {
            const HeadProfile& prof =
                cfg.profiles[static_cast<size_t>(l * h_count + h)];

            // Shared positional components: frequencies scale with 1/locality
            // so the expected visual-visual score decays with token distance;
            // a global head (locality = inf) gets flat components.
            Rng pos_rng(derive_seed(cfg.seed, l, h, 0, 1));
            for (int64_t f = 0; f < d; ++f) {
                omega[static_cast<size_t>(f)] =
                    std::isinf(prof.locality) ? 0.0
                                              : pos_rng.gaussian() / prof.locality;
                phase[static_cast<size_t>(f)] = pos_rng.uniform() * 2.0 * kPi;
            }

            Rng q_rng(derive_seed(cfg.seed, l, h, 0, 2));
            Rng k_rng(derive_seed(cfg.seed, l, h, 0, 3));
            Rng v_rng(derive_seed(cfg.seed, l, h, 0, 4));

            const int64_t base_idx = l; // t = 0 slot
            float* q0 = qs[static_cast<size_t>(base_idx)].f32() + h * n * d;
            float* k0 = ks[static_cast<size_t>(base_idx)].f32() + h * n * d;
            float* v0 = vs[static_cast<size_t>(base_idx)].f32() + h * n * d;

            const double text_scale = kTextGain / std::sqrt(static_cast<double>(d));
            for (int64_t i = 0; i < n; ++i) {
                const bool is_text = i >= text_lo && i < text_hi;
                for (int64_t f = 0; f < d; ++f) {
                    double qv, kv;
                    if (is_text) {
                        qv = text_scale * q_rng.gaussian();
                        kv = text_scale * k_rng.gaussian();
                    } else {
                        const double u =
                            feat_scale *
                            std::cos(omega[static_cast<size_t>(f)] *
                                         static_cast<double>(i) +
                                     phase[static_cast<size_t>(f)]);
                        qv = kPositionalGain * u + kVisualNoise * q_rng.gaussian();
                        kv = kPositionalGain * u + kVisualNoise * k_rng.gaussian();
                    }
                    q0[i * d + f] = static_cast<float>(qv);
                    k0[i * d + f] = static_cast<float>(kv);
                    v0[i * d + f] = static_cast<float>(v_rng.gaussian());
                }
            }

            // Random-walk drift: each timestep adds a fresh seeded
            // perturbation; drift 0 copies bit for bit.
            for (int64_t t = 1; t < cfg.n_timesteps; ++t) {
                const size_t prev = static_cast<size_t>((t - 1) * cfg.n_layers + l);
                const size_t cur = static_cast<size_t>(t * cfg.n_layers + l);
                float* qp = qs[prev].f32() + h * n * d;
                float* kp = ks[prev].f32() + h * n * d;
                float* vp = vs[prev].f32() + h * n * d;
                float* qc = qs[cur].f32() + h * n * d;
                float* kc = ks[cur].f32() + h * n * d;
                float* vc = vs[cur].f32() + h * n * d;
                if (prof.drift == 0.0) {
                    std::copy(qp, qp + n * d, qc);
                    std::copy(kp, kp + n * d, kc);
                    std::copy(vp, vp + n * d, vc);
                    continue;
                }
                Rng drift_rng(derive_seed(cfg.seed, l, h, t, 5));
                for (int64_t i = 0; i < n * d; ++i)
                    qc[i] = qp[i] +
                            static_cast<float>(prof.drift * drift_rng.gaussian());
                for (int64_t i = 0; i < n * d; ++i)
                    kc[i] = kp[i] +
                            static_cast<float>(prof.drift * drift_rng.gaussian());
                for (int64_t i = 0; i < n * d; ++i)
                    vc[i] = vp[i] +
                            static_cast<float>(prof.drift * drift_rng.gaussian());
            }
        }
    }
    return Workload(std::move(cfg), std::move(qs), std::move(ks), std::move(vs));
}

RunStats run_pipeline(const Workload& workload, const CompressionPlan& plan) {
    plan.validate();
    const WorkloadConfig& cfg = workload.config();
    if (plan.dims.n_heads != cfg.dims.n_heads ||
        plan.dims.head_dim != cfg.dims.head_dim ||
        plan.dims.n_visual != cfg.dims.n_visual ||
        plan.dims.n_text != cfg.dims.n_text ||
        plan.n_timesteps != cfg.n_timesteps || plan.n_layers != cfg.n_layers ||
        plan.block_size != cfg.block_size)
        throw PlanValidationError("plan dims do not match the workload");

    const auto start = std::chrono::steady_clock::now();
    RunStats stats;
    stats.outputs.reserve(static_cast<size_t>(cfg.n_timesteps * cfg.n_layers));
    HeadCache cache;
    for (int64_t t = 0; t < cfg.n_timesteps; ++t)
        for (int64_t l = 0; l < cfg.n_layers; ++l) {
            const LayerPlan& lp = plan.at(t, l);
            stats.outputs.push_back(
                multi_strategy_attention(workload.q(t, l), workload.k(t, l),
                                         workload.v(t, l), lp, cache, l, t,
                                         cfg.dims, cfg.block_size));
            stats.flops_total += plan_flops(lp, cfg.dims, cfg.block_size);
            stats.flops_dense +=
                cfg.dims.n_heads * dense_flops(cfg.dims.seq_len(), cfg.dims.head_dim);
        }
    stats.sparsity = 1.0 - static_cast<double>(stats.flops_total) /
                               static_cast<double>(stats.flops_dense);
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return stats;
}

} // namespace dfa2
