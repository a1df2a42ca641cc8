#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "dfa2/io.hpp"
#include "test_util.hpp"

using namespace dfa2;

TEST_CASE("dfa2 round trip is bit-exact") {
    testutil::Rng rng(21);
    for (Dtype dt : {Dtype::f32, Dtype::f64}) {
        for (const auto& shape :
             {std::vector<int64_t>{7}, std::vector<int64_t>{3, 5},
              std::vector<int64_t>{2, 3, 4, 5}}) {
            Tensor t = Tensor::zeros(shape, dt);
            testutil::fill_gaussian(t, rng);
            std::stringstream buf;
            write_dfa2(buf, t);
            CHECK(read_dfa2(buf) == t);
        }
    }
}

TEST_CASE("dfa2 header layout") {
    const Tensor t = Tensor::from_f32({2, 3}, {1, 2, 3, 4, 5, 6});
    std::stringstream buf;
    write_dfa2(buf, t);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 4) == "DFA2");
    // version 1, dtype 0, ndim 2, dims {2, 3}, then 6 f32 scalars
    CHECK(bytes.size() == 4 + 4 + 4 + 4 + 2 * 8 + 6 * 4);
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == 0);
    CHECK(bytes[12] == 2);
}

TEST_CASE("dfa2 rejects bad magic, version and truncation") {
    const Tensor t = Tensor::from_f32({2, 2}, {1, 2, 3, 4});
    std::stringstream buf;
    write_dfa2(buf, t);
    std::string bytes = buf.str();

    {
        std::string bad = bytes;
        bad[0] = 'X';
        std::stringstream in(bad);
        CHECK_THROWS_AS(read_dfa2(in), IoError);
    }
    {
        std::string bad = bytes;
        bad[4] = 9;
        std::stringstream in(bad);
        CHECK_THROWS_AS(read_dfa2(in), IoError);
    }
    {
        std::stringstream in(bytes.substr(0, bytes.size() - 3));
        CHECK_THROWS_AS(read_dfa2(in), IoError);
    }
    {
        std::stringstream in(bytes.substr(0, 10));
        CHECK_THROWS_AS(read_dfa2(in), IoError);
    }
}
