#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// End-to-end checks through the dfa2 binary (path injected by CMake).

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dfa2/calibrate.hpp"
#include "dfa2/plan.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;
};

CmdResult run_cli(const std::string& args) {
    const std::string cmd = std::string(DFA2_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult r;
    std::array<char, 4096> buf;
    while (fgets(buf.data(), buf.size(), pipe) != nullptr)
        r.output += buf.data();
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "dfa2_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Small workload so the CLI suite stays fast.
const std::string kDims = "--timesteps 3 --layers 2 --heads 4 --head-dim 8 "
                          "--visual-tokens 64 --text-tokens 8 --block 8";

double printed_value(const std::string& output, const std::string& label) {
    const size_t pos = output.find(label);
    REQUIRE(pos != std::string::npos);
    std::istringstream ss(output.substr(pos + label.size()));
    double v = 0.0;
    ss >> v;
    return v;
}

} // namespace

TEST_CASE("calibrate with zero budget writes an all-full plan") {
    const fs::path plan_path = temp_dir() / "plan_zero.json";
    const CmdResult r = run_cli("calibrate " + kDims + " --delta 0 --out " +
                                plan_path.string());
    CHECK(r.exit_code == 0);
    const dfa2::CompressionPlan plan = dfa2::load_plan(plan_path.string());
    for (const dfa2::LayerPlan& lp : plan.layers)
        for (const dfa2::HeadStrategy& s : lp.strategies)
            CHECK(s.kind == dfa2::StrategyKind::full);
    CHECK(printed_value(r.output, "aggregate sparsity:") == 0.0);
}

TEST_CASE("calibrate and run agree on the reported sparsity") {
    const fs::path plan_path = temp_dir() / "plan_04.json";
    const fs::path report_path = temp_dir() / "report_04.json";
    const CmdResult cal = run_cli("calibrate " + kDims + " --delta 0.4 --out " +
                                  plan_path.string());
    REQUIRE(cal.exit_code == 0);
    const double cal_sparsity = printed_value(cal.output, "aggregate sparsity:");

    const CmdResult run = run_cli("run " + kDims + " --plan " +
                                  plan_path.string() + " --report " +
                                  report_path.string());
    REQUIRE(run.exit_code == 0);
    const json report = json::parse(slurp(report_path));
    // exact agreement against the plan's own aggregate; printed summary is
    // rounded to 6 decimals
    const double plan_sparsity =
        dfa2::load_plan(plan_path.string()).aggregate_sparsity();
    CHECK(report.at("sparsity").get<double>() == plan_sparsity);
    CHECK(report.at("flops_reduction").get<double>() == plan_sparsity);
    CHECK(std::abs(cal_sparsity - plan_sparsity) < 1e-6);
    CHECK(report.at("mean_layer_rse").get<double>() >= 0.0);
    CHECK(report.at("max_layer_rse").get<double>() >=
          report.at("mean_layer_rse").get<double>());
}

TEST_CASE("constraint audit holds for coeff 1 and 1.5 plans") {
    for (const std::string coeff : {"1", "1.5"}) {
        const fs::path plan_path = temp_dir() / ("plan_c" + coeff + ".json");
        const fs::path csv_path = temp_dir() / ("infl_c" + coeff + ".csv");
        const CmdResult cal = run_cli("calibrate " + kDims +
                                      " --delta 0.4 --coeff " + coeff +
                                      " --out " + plan_path.string() +
                                      " --influence-csv " + csv_path.string());
        REQUIRE(cal.exit_code == 0);
        const dfa2::CompressionPlan plan = dfa2::load_plan(plan_path.string());
        CHECK(plan.influence_digest == dfa2::fnv1a_hex(slurp(csv_path)));

        std::istringstream csv(slurp(csv_path));
        const dfa2::InfluenceTable influences = dfa2::parse_influence_csv(
            csv, plan.n_timesteps, plan.n_layers, plan.dims.n_heads,
            {"arrow_w0", "arrow_w2", "cached"});
        CHECK(dfa2::audit_plan_constraints(plan, influences) == 0);
    }
}

TEST_CASE("a tampered plan with cached at t0 is rejected without running") {
    const fs::path plan_path = temp_dir() / "plan_tamper.json";
    const fs::path bad_path = temp_dir() / "plan_bad.json";
    const fs::path report_path = temp_dir() / "report_bad.json";
    fs::remove(report_path);
    REQUIRE(run_cli("calibrate " + kDims + " --delta 0.4 --out " +
                    plan_path.string())
                .exit_code == 0);

    json doc = json::parse(slurp(plan_path));
    for (auto& entry : doc.at("plan"))
        if (entry.at("t").get<int>() == 0 && entry.at("layer").get<int>() == 0)
            entry.at("heads")[0] = {{"kind", "cached"}};
    std::ofstream out(bad_path);
    out << doc.dump();
    out.close();

    const CmdResult run = run_cli("run " + kDims + " --plan " +
                                  bad_path.string() + " --report " +
                                  report_path.string());
    CHECK(run.exit_code == 2);
    CHECK_FALSE(fs::exists(report_path)); // no partial run
}

TEST_CASE("run rejects mismatched workload flags") {
    const fs::path plan_path = temp_dir() / "plan_dims.json";
    REQUIRE(run_cli("calibrate " + kDims + " --out " + plan_path.string())
                .exit_code == 0);
    const CmdResult r = run_cli("run " + kDims + " --heads 8 --plan " +
                                plan_path.string());
    CHECK(r.exit_code == 2);
}

TEST_CASE("verify passes on a pristine build and fails under fault injection") {
    const CmdResult ok = run_cli("verify --sizes 17,64,130");
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("FAIL") == std::string::npos);

    const CmdResult bad = run_cli("verify --fault mask-off-by-one");
    CHECK(bad.exit_code == 3);
    CHECK(bad.output.find("masked-dense-oracle") != std::string::npos);
    CHECK(bad.output.find("FAIL") != std::string::npos);
}

TEST_CASE("bench emits the pinned CSV schema") {
    const fs::path csv_path = temp_dir() / "bench.csv";
    const CmdResult r = run_cli(
        "bench --visual-tokens 256 --text-tokens 32 --head-dim 16 --block 32 "
        "--targets 0.5 --iters 3 --warmup 1 --out " +
        csv_path.string());
    REQUIRE(r.exit_code == 0);
    const std::string csv = slurp(csv_path);
    CHECK(csv.rfind("n_visual,n_text,head_dim,block,target_sparsity,"
                    "achieved_sparsity,dense_ms,sparse_ms,speedup,ideal\n",
                    0) == 0);
    CHECK(csv.find("256,32,16,32,") != std::string::npos);
}

TEST_CASE("bench rejects unreachable sparsity targets") {
    const CmdResult r = run_cli(
        "bench --visual-tokens 64 --text-tokens 32 --head-dim 8 --block 32 "
        "--targets 0.9 --iters 1 --warmup 0");
    CHECK(r.exit_code == 2);
}

TEST_CASE("workload export writes DFA2 dumps deterministically") {
    const fs::path dir_a = temp_dir() / "wl_a";
    const fs::path dir_b = temp_dir() / "wl_b";
    REQUIRE(run_cli("workload " + kDims + " --out-dir " + dir_a.string())
                .exit_code == 0);
    REQUIRE(run_cli("workload " + kDims + " --out-dir " + dir_b.string())
                .exit_code == 0);
    for (const std::string name : {"q.dfa2", "k.dfa2", "v.dfa2"}) {
        CHECK(fs::exists(dir_a / name));
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }
    const json sidecar = json::parse(slurp(dir_a / "workload.json"));
    CHECK(sidecar.at("H").get<int>() == 4);
    CHECK(sidecar.at("block").get<int>() == 8);
}

TEST_CASE("unknown flags are validation errors") {
    CHECK(run_cli("calibrate --no-such-flag").exit_code == 2);
    CHECK(run_cli("").exit_code == 2);
}
