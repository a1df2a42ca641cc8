#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dfa2/cache.hpp"
#include "test_util.hpp"

using namespace dfa2;

namespace {

Tensor random_out(testutil::Rng& rng, int64_t n = 6, int64_t d = 4) {
    Tensor t = Tensor::zeros({n, d});
    testutil::fill_gaussian(t, rng);
    return t;
}

} // namespace

TEST_CASE("store then fetch returns the identical tensor") {
    testutil::Rng rng(1);
    HeadCache cache;
    const Tensor out = random_out(rng);
    cache.store(2, 5, out, 0);
    CHECK(cache.fetch(2, 5) == out);
}

TEST_CASE("second store wins") {
    testutil::Rng rng(2);
    HeadCache cache;
    const Tensor first = random_out(rng);
    const Tensor second = random_out(rng);
    cache.store(0, 0, first, 1);
    cache.store(0, 0, second, 2);
    CHECK(cache.fetch(0, 0) == second);
    CHECK(cache.produced_at(0, 0) == 2);
}

TEST_CASE("stale entries keep their production timestep") {
    testutil::Rng rng(3);
    HeadCache cache;
    cache.store(1, 1, random_out(rng), 3);
    CHECK(cache.produced_at(1, 1) == 3);
    CHECK(cache.staleness(1, 1, 5) == 2);
    CHECK(cache.staleness(1, 1, 3) == 0);
    cache.store(1, 1, random_out(rng), 6);
    CHECK(cache.staleness(1, 1, 7) == 1);
}

TEST_CASE("fetch before any store is a cache miss") {
    HeadCache cache;
    CHECK_THROWS_AS(cache.fetch(0, 0), CacheMissError);
    CHECK_THROWS_AS(cache.staleness(0, 0, 1), CacheMissError);
    CHECK_FALSE(cache.has(0, 0));
}

TEST_CASE("heads and layers are isolated") {
    testutil::Rng rng(4);
    HeadCache cache;
    const Tensor a = random_out(rng);
    const Tensor b = random_out(rng);
    const Tensor c = random_out(rng);
    cache.store(0, 0, a, 0);
    cache.store(0, 1, b, 0);
    cache.store(1, 0, c, 0);
    cache.store(0, 1, random_out(rng), 1);
    CHECK(cache.fetch(0, 0) == a);
    CHECK(cache.fetch(1, 0) == c);
    CHECK(cache.size() == 3);
}

TEST_CASE("cache rejects non-2d entries") {
    HeadCache cache;
    CHECK_THROWS_AS(cache.store(0, 0, Tensor::zeros({2, 2, 2}), 0), ShapeError);
}
