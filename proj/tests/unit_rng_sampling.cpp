#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"

#include "tstar/errors.hpp"
#include "tstar/rng.hpp"
#include "tstar/sampling.hpp"

using namespace tstar;

namespace {

// Reference sampler: literal draw-then-renormalize scan. One uniform deviate
// per draw, crossing at the first index whose running prefix exceeds u, same
// as the tree descent.
std::vector<FrameIndex> naive_sample(std::vector<double> weights, std::int64_t n,
                                     Rng& rng) {
    std::vector<FrameIndex> out;
    for (std::int64_t draw = 0; draw < n; ++draw) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) break;
        const double u = rng.next_double() * total;
        double cum = 0.0;
        std::size_t pick = weights.size();
        for (std::size_t i = 0; i < weights.size(); ++i) {
            cum += weights[i];
            if (cum > u) { pick = i; break; }
        }
        if (pick == weights.size()) {
            for (std::size_t i = weights.size(); i-- > 0;)
                if (weights[i] > 0.0) { pick = i; break; }
        }
        out.push_back(static_cast<FrameIndex>(pick));
        weights[pick] = 0.0;
    }
    return out;
}

} // namespace

TEST_SUITE("rng_sampling") {

TEST_CASE("generator is reproducible and seed-sensitive") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform doubles live in [0,1) and look uniform") {
    Rng rng(7);
    double sum = 0.0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) {
        const double u = rng.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::fabs(sum / kDraws - 0.5) < 0.005);
}

TEST_CASE("next_below respects the bound and hits every residue") {
    Rng rng(11);
    std::map<std::uint64_t, int> counts;
    for (int i = 0; i < 7000; ++i) counts[rng.next_below(7)]++;
    CHECK(counts.size() == 7);
    for (const auto& [v, n] : counts) {
        CHECK(v < 7);
        CHECK(n > 700); // expectation 1000
    }
}

TEST_CASE("normal deviates have standard moments") {
    Rng rng(5);
    constexpr int kDraws = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        const double x = rng.next_normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / kDraws;
    const double var = sum2 / kDraws - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(derive_seed(0, "x") == fnv1a64("x"));
    CHECK(derive_seed(fnv1a64("x"), "x") == 0);
}

TEST_CASE("tree sampler equals the sequential-renormalize reference") {
    // Dyadic weights make every partial sum exact, so the two prefix-sum
    // orders cannot disagree.
    const std::vector<double> weights{0.25, 0.0, 0.5, 0.125, 0.0625, 0.0625, 0.0, 1.0};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng r1(seed), r2(seed);
        const auto fast = weighted_sample_without_replacement(weights, 6, r1);
        const auto slow = naive_sample(weights, 6, r2);
        REQUIRE(fast == slow);
    }
}

TEST_CASE("draw frequencies follow the weights") {
    const std::vector<double> weights{0.1, 0.2, 0.3, 0.4};
    std::map<FrameIndex, int> first_draw;
    Rng rng(99);
    constexpr int kTrials = 40000;
    for (int t = 0; t < kTrials; ++t) {
        const auto picks = weighted_sample_without_replacement(weights, 1, rng);
        REQUIRE(picks.size() == 1);
        first_draw[picks[0]]++;
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double freq = static_cast<double>(first_draw[static_cast<FrameIndex>(i)]) / kTrials;
        CHECK(std::fabs(freq - weights[i]) < 0.01);
    }
}

TEST_CASE("samples are distinct and zero weights are never drawn") {
    std::vector<double> weights(200, 0.0);
    for (std::size_t i = 0; i < weights.size(); i += 3) weights[i] = 1.0 + static_cast<double>(i);
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const auto picks = weighted_sample_without_replacement(weights, 40, rng);
        std::set<FrameIndex> unique(picks.begin(), picks.end());
        REQUIRE(unique.size() == picks.size());
        for (FrameIndex f : picks) REQUIRE(weights[static_cast<std::size_t>(f)] > 0.0);
    }
}

TEST_CASE("support exhaustion stops the draw early") {
    const std::vector<double> weights{0.0, 2.0, 0.0, 1.0, 0.0};
    Rng rng(1);
    const auto picks = weighted_sample_without_replacement(weights, 5, rng);
    REQUIRE(picks.size() == 2);
    const std::set<FrameIndex> got(picks.begin(), picks.end());
    CHECK(got == std::set<FrameIndex>{1, 3});
}

TEST_CASE("negative weights are rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(weighted_sample_without_replacement({0.5, -0.1}, 1, rng), StateError);
}

TEST_CASE("grid packs sorted samples row-major") {
    const GridLayout grid = build_grid({9, 2, 4}, 2);
    REQUIRE(grid.cells.size() == 4);
    CHECK(grid.cells[0] == FrameIndex{2});
    CHECK(grid.cells[1] == FrameIndex{4});
    CHECK(grid.cells[2] == FrameIndex{9});
    CHECK_FALSE(grid.cells[3].has_value());
    CHECK(grid.filled_count() == 3);
    CHECK(grid.filled_frames() == std::vector<FrameIndex>{2, 4, 9});
}

TEST_CASE("grid rejects contract violations") {
    CHECK_THROWS_AS(build_grid({1, 1}, 2), GridError);
    CHECK_THROWS_AS(build_grid({1, 2, 3, 4, 5}, 2), GridError);
    CHECK_THROWS_AS(build_grid({1}, 0), GridError);
}

} // TEST_SUITE
