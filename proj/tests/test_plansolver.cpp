#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>

#include "dfa2/plansolver.hpp"
#include "test_util.hpp"

using namespace dfa2;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PlanProblem make_problem(int64_t h, std::vector<double> costs,
                         std::vector<double> influence, double delta,
                         double coeff) {
    PlanProblem p;
    p.n_heads = h;
    p.n_methods = static_cast<int64_t>(costs.size());
    p.costs.full_cost = 1.0;
    p.costs.method_cost = std::move(costs);
    p.influence = std::move(influence);
    p.delta = delta;
    p.coeff = coeff;
    return p;
}

PlanProblem random_instance(testutil::Rng& rng) {
    const int64_t h = 2 + static_cast<int64_t>(rng.next() % 7);
    const int64_t m = 1 + static_cast<int64_t>(rng.next() % 3);
    const double deltas[] = {0.0, 0.2, 0.6, 1.0};
    const double coeffs[] = {1.0, 1.5, 2.0};
    std::vector<double> costs, infl;
    for (int64_t i = 0; i < m; ++i)
        costs.push_back(rng.uniform());
    for (int64_t i = 0; i < h * m; ++i)
        infl.push_back(rng.uniform());
    return make_problem(h, std::move(costs), std::move(infl),
                        deltas[rng.next() % 4], coeffs[rng.next() % 3]);
}

} // namespace

TEST_CASE("zero influences take the cheapest method everywhere") {
    // Arrow cost 0.5, cached cost 0; everything free influence-wise.
    const PlanProblem p =
        make_problem(3, {0.5, 0.0}, std::vector<double>(6, 0.0), 0.5, 1.5);
    const PlanSolution s = solve(p);
    CHECK(s.objective == 0.0);
    for (int64_t c : s.choice)
        CHECK(c == 1);
}

TEST_CASE("worked two-head example: cap excludes cached, budget admits one arrow") {
    // methods: arrow {cost 0.5, I 0.3}, cached {cost 0, I 0.6}; delta 0.5, c 2
    const PlanProblem p =
        make_problem(2, {0.5, 0.0}, {0.3, 0.6, 0.3, 0.6}, 0.5, 2.0);
    CHECK(selection_cap(p.coeff, p.n_heads, p.delta) == 0.5);
    const PlanSolution s = solve(p);
    CHECK(s.objective == 1.5);
    CHECK(s.choice[0] == 0); // head 0 takes the arrow
    CHECK(s.choice[1] == kFullChoice);
    const PlanSolution b = brute_force(p);
    CHECK(b.objective == s.objective);
    CHECK(b.choice == s.choice);
}

TEST_CASE("zero budget keeps every head full") {
    const PlanProblem p =
        make_problem(3, {0.5, 0.0}, std::vector<double>(6, 0.2), 0.0, 1.5);
    const PlanSolution s = solve(p);
    CHECK(s.objective == 3.0);
    for (int64_t c : s.choice)
        CHECK(c == kFullChoice);
    // identical boundary rule in the oracle
    const PlanSolution b = brute_force(p);
    CHECK(b.choice == s.choice);
}

TEST_CASE("zero budget stays all-full even for zero-influence candidates") {
    const PlanProblem p =
        make_problem(2, {0.0}, std::vector<double>(2, 0.0), 0.0, 1.5);
    const PlanSolution s = solve(p);
    for (int64_t c : s.choice)
        CHECK(c == kFullChoice);
    CHECK(brute_force(p).choice == s.choice);
}

TEST_CASE("all methods over the cap keep every head full") {
    // cap = 1.5/2*0.1 = 0.075; all influences 0.2
    const PlanProblem p =
        make_problem(2, {0.1, 0.0}, std::vector<double>(4, 0.2), 0.1, 1.5);
    const PlanSolution s = solve(p);
    for (int64_t c : s.choice)
        CHECK(c == kFullChoice);
}

TEST_CASE("single head, single method: selected iff it is cheaper than full") {
    const PlanProblem cheap = make_problem(1, {0.4}, {0.1}, 1.0, 2.0);
    CHECK(solve(cheap).choice[0] == 0);
    // same price as full with positive influence: the tie-break prefers the
    // lower total influence, so full wins
    const PlanProblem tie = make_problem(1, {1.0}, {0.1}, 1.0, 2.0);
    CHECK(solve(tie).choice[0] == kFullChoice);
}

TEST_CASE("ineligible marker influence is never selected") {
    const PlanProblem p = make_problem(2, {0.0}, {kInf, 0.01}, 1.0, 2.0);
    const PlanSolution s = solve(p);
    CHECK(s.choice[0] == kFullChoice);
    CHECK(s.choice[1] == 0);
}

TEST_CASE("solve matches brute force on random instances") {
    testutil::Rng rng(404);
    for (int inst = 0; inst < 300; ++inst) {
        const PlanProblem p = random_instance(rng);
        const PlanSolution a = solve(p);
        const PlanSolution b = brute_force(p);
        REQUIRE(a.objective == b.objective);
        REQUIRE(a.total_influence == b.total_influence);
        REQUIRE(a.choice == b.choice);
    }
}

TEST_CASE("objective is monotone in the budget") {
    testutil::Rng rng(505);
    for (int inst = 0; inst < 100; ++inst) {
        PlanProblem p = random_instance(rng);
        p.delta = 0.2;
        const double obj_small = solve(p).objective;
        p.delta = 0.9;
        const double obj_large = solve(p).objective;
        CHECK(obj_large <= obj_small);
    }
}

TEST_CASE("cap below the smallest positive influence keeps every head full") {
    testutil::Rng rng(606);
    PlanProblem p = random_instance(rng);
    double min_infl = kInf;
    for (double v : p.influence)
        min_infl = std::min(min_infl, v);
    REQUIRE(min_infl > 0.0);
    p.coeff = 1.0;
    p.delta = 0.9 * min_infl * p.n_heads; // cap = delta/H < min influence
    REQUIRE(selection_cap(p.coeff, p.n_heads, p.delta) < min_infl);
    for (int64_t c : solve(p).choice)
        CHECK(c == kFullChoice);
}

TEST_CASE("lp relaxation never exceeds the integer optimum") {
    testutil::Rng rng(707);
    for (int inst = 0; inst < 200; ++inst) {
        const PlanProblem p = random_instance(rng);
        const double lp = lp_relaxation_bound(p);
        const double opt = brute_force(p).objective;
        CHECK(lp <= opt + 1e-12);
    }
}

TEST_CASE("brute force rejects oversized instances") {
    const PlanProblem p = make_problem(16, {0.5, 0.2, 0.1},
                                       std::vector<double>(48, 0.1), 0.5, 1.5);
    CHECK_THROWS_AS(brute_force(p), std::invalid_argument);
    // the exact search still handles it
    const PlanSolution s = solve(p);
    CHECK(s.choice.size() == 16);
}

TEST_CASE("solver validates its inputs") {
    CHECK_THROWS_AS(solve(make_problem(2, {1.5}, {0.1, 0.1}, 0.5, 1.5)),
                    std::invalid_argument); // method cost above full
    CHECK_THROWS_AS(solve(make_problem(2, {0.5}, {0.1, 0.1}, -1.0, 1.5)),
                    std::invalid_argument);
    CHECK_THROWS_AS(solve(make_problem(2, {0.5}, {0.1, 0.1}, 0.5, 0.5)),
                    std::invalid_argument);
}

TEST_CASE("analytic costs: maximal arrow 1.0, mid arrow 0.52, cached 0") {
    AttentionDims dims;
    dims.n_heads = 4;
    dims.head_dim = 32;
    dims.n_visual = 512;
    dims.n_text = 128;
    const std::vector<HeadStrategy> methods = {
        HeadStrategy::Arrow(0), HeadStrategy::Arrow(100), HeadStrategy::Cached()};
    const CostModel cm = analytic_costs(dims, 128, methods);
    CHECK(cm.full_cost == 1.0);
    CHECK(cm.method_cost[0] == doctest::Approx(0.52));
    CHECK(cm.method_cost[1] == 1.0);
    CHECK(cm.method_cost[2] == 0.0);
}

TEST_CASE("unbounded budget takes the cheapest option per head") {
    const PlanProblem p = make_problem(
        2, {0.3, 0.0}, {0.9, 0.8, 0.7, 0.6}, kInf, 1.5);
    const PlanSolution s = solve(p);
    CHECK(s.objective == 0.0);
    CHECK(s.choice[0] == 1);
    CHECK(s.choice[1] == 1);
}
