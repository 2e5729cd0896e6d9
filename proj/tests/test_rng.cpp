#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "gnclab/rng.hpp"

using namespace gnclab;

TEST_CASE("counter words are pure functions of (seed, stream, index)", "[rng]") {
    const CounterRng a(42, 7);
    const CounterRng b(42, 7);
    std::vector<std::uint64_t> forward, backward;
    for (std::uint64_t i = 0; i < 100; ++i) forward.push_back(a.word(i));
    for (std::uint64_t i = 100; i-- > 0;) backward.push_back(b.word(i));
    for (std::uint64_t i = 0; i < 100; ++i)
        REQUIRE(forward[static_cast<std::size_t>(i)] ==
                backward[static_cast<std::size_t>(99 - i)]);
    REQUIRE(a.word(12345) == b.word(12345));
}

TEST_CASE("distinct streams and seeds decorrelate", "[rng]") {
    const CounterRng base(1, 0);
    const CounterRng other_stream(1, 1);
    const CounterRng other_seed(2, 0);
    int same_stream = 0, same_seed = 0;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        if (base.word(i) == other_stream.word(i)) ++same_stream;
        if (base.word(i) == other_seed.word(i)) ++same_seed;
    }
    REQUIRE(same_stream == 0);
    REQUIRE(same_seed == 0);
}

TEST_CASE("index stays in range and is roughly uniform", "[rng]") {
    const CounterRng rng(3, 11);
    const std::uint64_t n = 6;
    std::vector<std::uint64_t> hist(n, 0);
    const std::uint64_t draws = 60000;
    for (std::uint64_t i = 0; i < draws; ++i) {
        const std::uint64_t v = rng.index(i, n);
        REQUIRE(v < n);
        ++hist[static_cast<std::size_t>(v)];
    }
    for (auto h : hist) {
        REQUIRE(h > 9000);
        REQUIRE(h < 11000);
    }
    REQUIRE(rng.index(0, 1) == 0);
}

TEST_CASE("unit draws lie strictly inside (0,1)", "[rng]") {
    const CounterRng rng(9, 2);
    double mn = 1.0, mx = 0.0;
    for (std::uint64_t i = 0; i < 100000; ++i) {
        const double u = rng.unit(i);
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        mn = std::min(mn, u);
        mx = std::max(mx, u);
    }
    REQUIRE(mn < 0.01);
    REQUIRE(mx > 0.99);
}

TEST_CASE("sequential facade replays the counter words in order", "[rng]") {
    const CounterRng counter(5, 77);
    StreamRng seq(5, 77);
    for (std::uint64_t i = 0; i < 50; ++i) REQUIRE(seq.u64() == counter.word(i));
    REQUIRE(seq.cursor() == 50);

    StreamRng seq2(5, 77);
    for (std::uint64_t i = 0; i < 20; ++i)
        REQUIRE(seq2.unit() == Catch::Approx(counter.unit(i)).epsilon(0));
}

TEST_CASE("normal consumes two counter words per draw", "[rng]") {
    StreamRng seq(13, 4);
    const CounterRng counter(13, 4);
    for (std::uint64_t i = 0; i < 25; ++i) {
        const double got = seq.normal();
        REQUIRE(got == counter.normal(i));
        REQUIRE(seq.cursor() == 2 * (i + 1));
    }
}

TEST_CASE("normal has roughly standard moments", "[rng]") {
    const CounterRng rng(17, 1);
    const std::uint64_t n = 20000;
    double sum = 0.0, sq = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double z = rng.normal(i);
        sum += z;
        sq += z * z;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sq / static_cast<double>(n) - mean * mean;
    REQUIRE(std::fabs(mean) < 0.05);
    REQUIRE(std::fabs(var - 1.0) < 0.1);
}

TEST_CASE("mix64 avalanches single-bit flips", "[rng]") {
    const std::uint64_t h0 = mix64(0x123456789abcdefULL);
    for (int bit = 0; bit < 64; ++bit) {
        const std::uint64_t h1 = mix64(0x123456789abcdefULL ^ (1ULL << bit));
        int diff = 0;
        for (std::uint64_t d = h0 ^ h1; d; d &= d - 1) ++diff;
        REQUIRE(diff >= 10);
    }
}
