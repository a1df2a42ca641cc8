// dfa2: workload generation, plan calibration, plan execution, oracle
// verification and kernel benchmarking. Exit codes: 0 success, 2 validation
// error, 3 oracle failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dfa2/bench.hpp"
#include "dfa2/calibrate.hpp"
#include "dfa2/io.hpp"
#include "dfa2/kernels.hpp"
#include "dfa2/plan.hpp"
#include "dfa2/plansolver.hpp"
#include "dfa2/workload.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitOracle = 3;

struct WorkloadFlags {
    int64_t timesteps = 8;
    int64_t layers = 4;
    int64_t heads = 8;
    int64_t head_dim = 32;
    int64_t visual_tokens = 256;
    int64_t text_tokens = 32;
    int64_t block = 32;
    uint64_t seed = 1234;
    std::string token_order = "visual-first";

    dfa2::WorkloadConfig to_config() const {
        dfa2::WorkloadConfig cfg;
        cfg.dims.n_heads = heads;
        cfg.dims.head_dim = head_dim;
        cfg.dims.n_visual = visual_tokens;
        cfg.dims.n_text = text_tokens;
        if (token_order == "visual-first")
            cfg.dims.order = dfa2::TokenOrder::visual_first;
        else if (token_order == "text-first")
            cfg.dims.order = dfa2::TokenOrder::text_first;
        else
            throw dfa2::ShapeError("token order must be visual-first or text-first");
        cfg.n_layers = layers;
        cfg.n_timesteps = timesteps;
        cfg.block_size = block;
        cfg.seed = seed;
        return cfg;
    }
};

void add_workload_flags(CLI::App* cmd, WorkloadFlags& f) {
    cmd->add_option("--timesteps", f.timesteps, "denoising timesteps T");
    cmd->add_option("--layers", f.layers, "attention layers L");
    cmd->add_option("--heads", f.heads, "attention heads H per layer");
    cmd->add_option("--head-dim", f.head_dim, "head dimension d");
    cmd->add_option("--visual-tokens", f.visual_tokens, "visual token count");
    cmd->add_option("--text-tokens", f.text_tokens, "text token count");
    cmd->add_option("--block", f.block, "block size in tokens");
    cmd->add_option("--seed", f.seed, "workload seed");
    cmd->add_option("--token-order", f.token_order,
                    "visual-first (default) or text-first");
}

std::vector<int64_t> parse_i64_list(const std::string& text) {
    std::vector<int64_t> out;
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty())
            out.push_back(std::stoll(tok));
    return out;
}

std::vector<double> parse_f64_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty())
            out.push_back(std::stod(tok));
    return out;
}

double max_rel_error_vs_f64(const dfa2::Tensor& got, const dfa2::Tensor& want64) {
    const dfa2::Tensor g = got.to_f64();
    const double* a = g.f64();
    const double* b = want64.f64();
    double max_abs = 0.0, max_ref = 0.0;
    for (int64_t i = 0; i < want64.numel(); ++i) {
        max_abs = std::max(max_abs, std::abs(a[i] - b[i]));
        max_ref = std::max(max_ref, std::abs(b[i]));
    }
    return max_abs / (max_ref + 1e-300);
}

// ---------------------------------------------------------------- calibrate

int cmd_calibrate(const WorkloadFlags& wf, double delta, double coeff,
                  const std::string& windows_text, const std::string& out_path,
                  std::string csv_path, bool rse_literal, bool no_cache_method) {
    const std::vector<int64_t> windows = parse_i64_list(windows_text);
    if (csv_path.empty())
        csv_path = out_path + ".influence.csv";

    const dfa2::Workload workload = dfa2::generate(wf.to_config());
    dfa2::CalibrationConfig cc;
    cc.methods = dfa2::make_candidates(windows, !no_cache_method);
    cc.delta = delta;
    cc.coeff = coeff;
    cc.rse_mode = rse_literal ? dfa2::RseMode::literal : dfa2::RseMode::standard;

    dfa2::CalibrationResult result = dfa2::calibrate_model(workload, cc);

    const std::string csv = result.influences.to_csv();
    std::ofstream csv_out(csv_path, std::ios::binary);
    if (!csv_out)
        throw dfa2::IoError("cannot open " + csv_path + " for writing");
    csv_out << csv;
    csv_out.close();
    result.plan.influence_digest = dfa2::fnv1a_hex(csv);
    dfa2::save_plan(result.plan, out_path);

    std::printf("plan:               %s\n", out_path.c_str());
    std::printf("influence csv:      %s\n", csv_path.c_str());
    std::printf("aggregate sparsity: %.6f\n", result.plan.aggregate_sparsity());
    std::printf("attention evals:    %lld\n",
                static_cast<long long>(result.stats.attention_evals));
    std::printf("wall time:          %.3f s\n", result.stats.wall_seconds);
    return kExitOk;
}

// ---------------------------------------------------------------------- run

int cmd_run(const WorkloadFlags& wf, const std::string& plan_path,
            const std::string& report_path) {
    const dfa2::CompressionPlan plan = dfa2::load_plan(plan_path);
    const dfa2::WorkloadConfig cfg = wf.to_config();
    if (plan.dims.n_heads != cfg.dims.n_heads ||
        plan.dims.head_dim != cfg.dims.head_dim ||
        plan.dims.n_visual != cfg.dims.n_visual ||
        plan.dims.n_text != cfg.dims.n_text ||
        plan.n_timesteps != cfg.n_timesteps || plan.n_layers != cfg.n_layers ||
        plan.block_size != cfg.block_size)
        throw dfa2::PlanValidationError("plan dims do not match workload flags");

    const dfa2::Workload workload = dfa2::generate(cfg);
    const dfa2::RunStats run = dfa2::run_pipeline(workload, plan);
    const dfa2::CompressionPlan baseline_plan = dfa2::CompressionPlan::all_full(
        cfg.dims, cfg.n_timesteps, cfg.n_layers, cfg.block_size);
    const dfa2::RunStats base = dfa2::run_pipeline(workload, baseline_plan);

    double mean_rse = 0.0, max_rse = 0.0;
    for (size_t i = 0; i < run.outputs.size(); ++i) {
        const double r = run.outputs[i] == base.outputs[i]
                             ? 0.0
                             : dfa2::rse(run.outputs[i], base.outputs[i]);
        mean_rse += r;
        max_rse = std::max(max_rse, r);
    }
    mean_rse /= static_cast<double>(run.outputs.size());

    nlohmann::json report;
    report["sparsity"] = run.sparsity;
    report["flops_reduction"] = run.sparsity;
    report["mean_layer_rse"] = mean_rse;
    report["max_layer_rse"] = max_rse;
    report["wall_time"] = run.wall_seconds;
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary);
        if (!out)
            throw dfa2::IoError("cannot open " + report_path + " for writing");
        out << report.dump(2) << "\n";
    }
    std::printf("sparsity:        %.6f\n", run.sparsity);
    std::printf("flops reduction: %.6f\n", run.sparsity);
    std::printf("mean layer rse:  %.6g\n", mean_rse);
    std::printf("max layer rse:   %.6g\n", max_rse);
    std::printf("wall time:       %.3f s\n", run.wall_seconds);
    return kExitOk;
}

// ------------------------------------------------------------------- verify

dfa2::BlockMask corrupt_mask_off_by_one(const dfa2::BlockMask& mask,
                                        const dfa2::AttentionDims& dims) {
    // Shift the visual diagonal band one block to the right; text bands
    // keep every row nonempty.
    dfa2::BlockMask bad = mask;
    const int64_t text_lo = dims.text_begin();
    const int64_t text_hi = dims.text_end();
    auto is_text_block = [&](int64_t i) {
        const int64_t lo = i * mask.block_size;
        const int64_t hi = std::min(lo + mask.block_size, mask.seq_len);
        return lo < text_hi && hi > text_lo;
    };
    for (int64_t i = 0; i < mask.n_query_blocks; ++i)
        for (int64_t j = 0; j < mask.n_key_blocks; ++j) {
            if (is_text_block(i) || is_text_block(j))
                continue;
            bad.set(i, j, j > 0 ? mask.is_active(i, j - 1) : false);
        }
    return bad;
}

struct VerifySection {
    std::string name;
    bool pass = true;
    int64_t checks = 0;
    std::string detail;
};

int cmd_verify(const std::string& sizes_text, const std::string& fault,
               uint64_t seed) {
    const std::vector<int64_t> sizes = parse_i64_list(sizes_text);
    std::vector<VerifySection> sections;
    std::mt19937_64 eng(seed);
    auto uniform = [&] { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
    auto gaussian = [&] {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * uniform());
    };

    // 1. masked-dense oracle: streaming sparse kernel vs f64 reference.
    {
        VerifySection s{"masked-dense-oracle"};
        double worst = 0.0;
        for (int64_t n : sizes) {
            for (int64_t b : {int64_t{16}, int64_t{32}}) {
                dfa2::AttentionDims dims;
                dims.n_heads = 1;
                dims.head_dim = 16;
                dims.n_text = std::max<int64_t>(1, n / 5);
                dims.n_visual = n - dims.n_text;
                if (dims.n_visual < 1)
                    continue;
                const int64_t max_w = (dims.n_visual + b - 1) / b - 1;
                for (int64_t w : {int64_t{0}, int64_t{1}, max_w}) {
                    if (w < 0)
                        continue;
                    const dfa2::BlockMask mask =
                        dfa2::build_arrow_mask({dims, b, w});
                    const dfa2::BlockMask kernel_mask =
                        fault == "mask-off-by-one"
                            ? corrupt_mask_off_by_one(mask, dims)
                            : mask;
                    dfa2::Tensor q = dfa2::Tensor::zeros({n, dims.head_dim});
                    dfa2::Tensor k = dfa2::Tensor::zeros({n, dims.head_dim});
                    dfa2::Tensor v = dfa2::Tensor::zeros({n, dims.head_dim});
                    for (int64_t i = 0; i < n * dims.head_dim; ++i) {
                        q.f32()[i] = static_cast<float>(gaussian());
                        k.f32()[i] = static_cast<float>(gaussian());
                        v.f32()[i] = static_cast<float>(gaussian());
                    }
                    const dfa2::Tensor got =
                        dfa2::sparse_attention_forward(q, k, v, kernel_mask);
                    dfa2::Tensor q3 = dfa2::Tensor::zeros({1, n, dims.head_dim},
                                                          dfa2::Dtype::f64);
                    dfa2::Tensor k3 = dfa2::Tensor::zeros({1, n, dims.head_dim},
                                                          dfa2::Dtype::f64);
                    dfa2::Tensor v3 = dfa2::Tensor::zeros({1, n, dims.head_dim},
                                                          dfa2::Dtype::f64);
                    for (int64_t i = 0; i < n * dims.head_dim; ++i) {
                        q3.f64()[i] = static_cast<double>(q.f32()[i]);
                        k3.f64()[i] = static_cast<double>(k.f32()[i]);
                        v3.f64()[i] = static_cast<double>(v.f32()[i]);
                    }
                    const dfa2::Tensor oracle =
                        dfa2::attention_reference(q3, k3, v3, &mask);
                    const double err = max_rel_error_vs_f64(got, oracle);
                    worst = std::max(worst, err);
                    ++s.checks;
                    if (err > 1e-5)
                        s.pass = false;
                }
            }
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "max rel err %.3g", worst);
        s.detail = buf;
        sections.push_back(s);
    }

    // 2. brute-force solver oracle.
    {
        VerifySection s{"solver-brute-force"};
        const double deltas[] = {0.0, 0.2, 0.6, 1.0};
        const double coeffs[] = {1.0, 1.5, 2.0};
        for (int inst = 0; inst < 200; ++inst) {
            dfa2::PlanProblem p;
            p.n_heads = 2 + static_cast<int64_t>(eng() % 7);
            p.n_methods = 1 + static_cast<int64_t>(eng() % 3);
            p.delta = deltas[eng() % 4];
            p.coeff = coeffs[eng() % 3];
            p.costs.full_cost = 1.0;
            for (int64_t m = 0; m < p.n_methods; ++m)
                p.costs.method_cost.push_back(uniform());
            for (int64_t i = 0; i < p.n_heads * p.n_methods; ++i)
                p.influence.push_back(uniform());
            const dfa2::PlanSolution a = dfa2::solve(p);
            const dfa2::PlanSolution b = dfa2::brute_force(p);
            ++s.checks;
            if (a.objective != b.objective || a.choice != b.choice) {
                s.pass = false;
                s.detail = "instance " + std::to_string(inst) + " diverged";
                break;
            }
        }
        sections.push_back(s);
    }

    // 3. streaming-softmax parity: one pass with renormalization vs the
    // two-pass reference over the active set, scalar ISA on both sides.
    {
        VerifySection s{"streaming-softmax-parity"};
        const dfa2::kern::Isa prev = dfa2::kern::active_isa();
        dfa2::kern::force_isa(dfa2::kern::Isa::scalar);
        double worst = 0.0;
        for (int64_t n : sizes) {
            dfa2::AttentionDims dims;
            dims.n_heads = 1;
            dims.head_dim = 16;
            dims.n_text = std::max<int64_t>(1, n / 6);
            dims.n_visual = n - dims.n_text;
            if (dims.n_visual < 1)
                continue;
            const dfa2::BlockMask mask = dfa2::build_arrow_mask({dims, 16, 1});
            dfa2::Tensor q = dfa2::Tensor::zeros({1, n, dims.head_dim});
            dfa2::Tensor k = dfa2::Tensor::zeros({1, n, dims.head_dim});
            dfa2::Tensor v = dfa2::Tensor::zeros({1, n, dims.head_dim});
            for (int64_t i = 0; i < n * dims.head_dim; ++i) {
                q.f32()[i] = static_cast<float>(gaussian());
                k.f32()[i] = static_cast<float>(gaussian());
                v.f32()[i] = static_cast<float>(gaussian());
            }
            dfa2::Tensor got = dfa2::Tensor::zeros({n, dims.head_dim});
            dfa2::sparse_attention_forward(q.f32(), k.f32(), v.f32(), got.f32(),
                                           n, dims.head_dim, mask);
            const dfa2::Tensor two_pass =
                dfa2::attention_reference(q, k, v, &mask);
            const double err = max_rel_error_vs_f64(got, two_pass.to_f64());
            worst = std::max(worst, err);
            ++s.checks;
            if (err > 1e-6)
                s.pass = false;
        }
        dfa2::kern::force_isa(prev);
        char buf[64];
        std::snprintf(buf, sizeof buf, "max rel err %.3g", worst);
        s.detail = buf;
        sections.push_back(s);
    }

    // 4. cache semantics: round trip, staleness, isolation, miss.
    {
        VerifySection s{"cache-semantics"};
        dfa2::HeadCache cache;
        dfa2::Tensor a = dfa2::Tensor::zeros({4, 2});
        for (int64_t i = 0; i < 8; ++i)
            a.f32()[i] = static_cast<float>(gaussian());
        bool ok = true;
        try {
            cache.fetch(0, 0);
            ok = false; // must throw
        } catch (const dfa2::CacheMissError&) {
        }
        cache.store(0, 0, a, 3);
        ok = ok && cache.fetch(0, 0) == a;
        ok = ok && cache.staleness(0, 0, 5) == 2;
        dfa2::Tensor b = a;
        b.f32()[0] += 1.0f;
        cache.store(0, 1, b, 4);
        ok = ok && cache.fetch(0, 0) == a && cache.fetch(0, 1) == b;
        cache.store(0, 0, b, 6);
        ok = ok && cache.fetch(0, 0) == b && cache.produced_at(0, 0) == 6;
        s.checks = 5;
        s.pass = ok;
        sections.push_back(s);
    }

    bool all_pass = true;
    for (const VerifySection& s : sections) {
        std::printf("%-28s %s  (%lld checks%s%s)\n", s.name.c_str(),
                    s.pass ? "PASS" : "FAIL", static_cast<long long>(s.checks),
                    s.detail.empty() ? "" : ", ", s.detail.c_str());
        all_pass = all_pass && s.pass;
    }
    return all_pass ? kExitOk : kExitOracle;
}

// -------------------------------------------------------------------- bench

int cmd_bench(int64_t visual, int64_t text, int64_t head_dim, int64_t block,
              const std::string& targets_text, int iters, int warmup,
              bool parallel, bool no_check, const std::string& out_path) {
    dfa2::BenchConfig cfg;
    cfg.n_visual = visual;
    cfg.n_text = text;
    cfg.head_dim = head_dim;
    cfg.block = block;
    cfg.targets = parse_f64_list(targets_text);
    cfg.iters = iters;
    cfg.warmup = warmup;
    cfg.parallel = parallel;
    cfg.check_outputs = !no_check;

    const std::vector<dfa2::BenchResult> results = dfa2::run_bench(cfg);
    std::ostringstream csv;
    dfa2::write_bench_csv(csv, results);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out)
            throw dfa2::IoError("cannot open " + out_path + " for writing");
        out << csv.str();
    }
    std::fputs(csv.str().c_str(), stdout);
    return kExitOk;
}

// ----------------------------------------------------------------- workload

int cmd_workload(const WorkloadFlags& wf, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const dfa2::WorkloadConfig cfg = wf.to_config();
    const dfa2::Workload workload = dfa2::generate(cfg);
    fs::create_directories(out_dir);

    const int64_t t_count = cfg.n_timesteps, l_count = cfg.n_layers;
    const int64_t h = cfg.dims.n_heads, n = cfg.dims.seq_len(),
                  d = cfg.dims.head_dim;
    const int64_t slice = h * n * d;

    auto stack = [&](auto&& pick) {
        dfa2::Tensor big = dfa2::Tensor::zeros({t_count, l_count, h, n, d});
        for (int64_t t = 0; t < t_count; ++t)
            for (int64_t l = 0; l < l_count; ++l) {
                const dfa2::Tensor& src = pick(t, l);
                std::copy(src.f32(), src.f32() + slice,
                          big.f32() + (t * l_count + l) * slice);
            }
        return big;
    };
    const dfa2::Tensor q = stack([&](int64_t t, int64_t l) -> const dfa2::Tensor& {
        return workload.q(t, l);
    });
    const dfa2::Tensor k = stack([&](int64_t t, int64_t l) -> const dfa2::Tensor& {
        return workload.k(t, l);
    });
    const dfa2::Tensor v = stack([&](int64_t t, int64_t l) -> const dfa2::Tensor& {
        return workload.v(t, l);
    });

    const std::string qp = (fs::path(out_dir) / "q.dfa2").string();
    const std::string kp = (fs::path(out_dir) / "k.dfa2").string();
    const std::string vp = (fs::path(out_dir) / "v.dfa2").string();
    dfa2::save_dfa2(q, qp);
    dfa2::save_dfa2(k, kp);
    dfa2::save_dfa2(v, vp);

    // Round-trip check: the dump format must be bit-exact.
    if (dfa2::load_dfa2(qp) != q || dfa2::load_dfa2(kp) != k ||
        dfa2::load_dfa2(vp) != v)
        throw dfa2::IoError("DFA2 round trip mismatch");

    nlohmann::json sidecar;
    sidecar["T"] = t_count;
    sidecar["L"] = l_count;
    sidecar["H"] = h;
    sidecar["d"] = d;
    sidecar["n_visual"] = cfg.dims.n_visual;
    sidecar["n_text"] = cfg.dims.n_text;
    sidecar["block"] = cfg.block_size;
    sidecar["seed"] = cfg.seed;
    sidecar["token_order"] =
        cfg.dims.order == dfa2::TokenOrder::visual_first ? "visual-first"
                                                         : "text-first";
    nlohmann::json profiles = nlohmann::json::array();
    for (int64_t l = 0; l < l_count; ++l)
        for (int64_t head = 0; head < h; ++head) {
            const dfa2::HeadProfile& p = workload.profile(l, head);
            profiles.push_back({{"layer", l},
                                {"head", head},
                                {"locality", std::isinf(p.locality)
                                                 ? nlohmann::json("inf")
                                                 : nlohmann::json(p.locality)},
                                {"drift", p.drift}});
        }
    sidecar["profiles"] = std::move(profiles);
    std::ofstream side((fs::path(out_dir) / "workload.json").string(),
                       std::ios::binary);
    side << sidecar.dump(2) << "\n";

    std::printf("wrote %s, %s, %s and workload.json (round trip verified)\n",
                qp.c_str(), kp.c_str(), vp.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"head-wise multi-strategy attention pipeline"};
    app.require_subcommand(1);

    // calibrate
    auto* cal = app.add_subcommand("calibrate",
                                   "search a compression plan on the synthetic "
                                   "workload");
    WorkloadFlags cal_wf;
    add_workload_flags(cal, cal_wf);
    double delta = 0.4, coeff = 1.5;
    std::string windows = "0,2";
    std::string plan_out = "plan.json";
    std::string csv_out;
    bool rse_literal = false, no_cache_method = false;
    cal->add_option("--delta", delta, "per-(t,layer) influence budget");
    cal->add_option("--coeff", coeff, "per-selection cap coefficient c");
    cal->add_option("--windows", windows, "arrow window radii in blocks");
    cal->add_option("--out", plan_out, "plan JSON path");
    cal->add_option("--influence-csv", csv_out,
                    "influence CSV path (default <out>.influence.csv)");
    cal->add_flag("--rse-literal", rse_literal,
                  "use the variance-form numerator instead of standard RSE");
    cal->add_flag("--no-cache-method", no_cache_method,
                  "exclude the cached candidate from the method set");

    // run
    auto* run = app.add_subcommand("run", "execute a plan and report error vs "
                                          "the all-full baseline");
    WorkloadFlags run_wf;
    add_workload_flags(run, run_wf);
    std::string plan_in, report_out;
    run->add_option("--plan", plan_in, "plan JSON path")->required();
    run->add_option("--report", report_out, "report JSON path");

    // verify
    auto* ver = app.add_subcommand("verify", "run the oracle suites");
    std::string sizes = "17,64,130";
    std::string fault = "none";
    uint64_t verify_seed = 99;
    ver->add_option("--sizes", sizes, "sequence lengths to exercise");
    ver->add_option("--fault", fault, "none or mask-off-by-one (self-test)");
    ver->add_option("--seed", verify_seed, "verification seed");

    // bench
    auto* ben = app.add_subcommand("bench", "dense vs arrow sparse kernel "
                                            "latency");
    int64_t b_visual = 4096, b_text = 512, b_dim = 64, b_block = 128;
    std::string targets = "0.25,0.5,0.75";
    int iters = 20, warmup = 3;
    bool parallel = false, no_check = false;
    std::string bench_out;
    ben->add_option("--visual-tokens", b_visual, "visual token count");
    ben->add_option("--text-tokens", b_text, "text token count");
    ben->add_option("--head-dim", b_dim, "head dimension");
    ben->add_option("--block", b_block, "block size");
    ben->add_option("--targets", targets, "sparsity targets");
    ben->add_option("--iters", iters, "timed iterations per path");
    ben->add_option("--warmup", warmup, "warmup iterations per path");
    ben->add_flag("--parallel", parallel, "parallel kernel path (DFA2_THREADS)");
    ben->add_flag("--no-check", no_check, "skip the pre-timing oracle check");
    ben->add_option("--out", bench_out, "CSV output path");

    // workload
    auto* wl = app.add_subcommand("workload", "export the synthetic workload "
                                              "as DFA2 dumps");
    WorkloadFlags wl_wf;
    add_workload_flags(wl, wl_wf);
    std::string out_dir = "workload_out";
    wl->add_option("--out-dir", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (cal->parsed())
            return cmd_calibrate(cal_wf, delta, coeff, windows, plan_out, csv_out,
                                 rse_literal, no_cache_method);
        if (run->parsed())
            return cmd_run(run_wf, plan_in, report_out);
        if (ver->parsed())
            return cmd_verify(sizes, fault, verify_seed);
        if (ben->parsed())
            return cmd_bench(b_visual, b_text, b_dim, b_block, targets, iters,
                             warmup, parallel, no_check, bench_out);
        if (wl->parsed())
            return cmd_workload(wl_wf, out_dir);
    } catch (const dfa2::OracleError& e) {
        std::fprintf(stderr, "oracle failure: %s\n", e.what());
        return kExitOracle;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitValidation;
}
