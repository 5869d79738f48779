#include "oracles.h"
#include "popsynth/core/error.h"
#include "popsynth/ipf/integerize.h"

#include <cmath>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

using namespace popsynth;

namespace {

std::uint64_t sum(const std::vector<std::uint32_t> &counts) {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

} // namespace

TEST(RoundHalfEven, Ties) {
    EXPECT_EQ(round_half_even(0.5), 0.0);
    EXPECT_EQ(round_half_even(1.5), 2.0);
    EXPECT_EQ(round_half_even(2.5), 2.0);
    EXPECT_EQ(round_half_even(2.4999), 2.0);
    EXPECT_EQ(round_half_even(2.5001), 3.0);
    EXPECT_EQ(round_half_even(7.0), 7.0);
}

TEST(UniformOpen01, NeverHitsBounds) {
    Rng rng{3};
    for (int i = 0; i < 100000; ++i) {
        const double u = uniform_open01(rng);
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(IntegerizeTrs, IntegerWeightsUnchanged) {
    const std::vector<double> w{2, 3, 0};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng{seed};
        EXPECT_EQ(integerize_trs(w, rng), (std::vector<std::uint32_t>{2, 3, 0}));
    }
}

TEST(IntegerizeTrs, HalvesExample) {
    const std::vector<double> w{1.5, 1.5, 0.5, 0.5};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng{seed};
        const auto counts = integerize_trs(w, rng);
        EXPECT_EQ(sum(counts), 4U);
        int extras = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const auto fl = static_cast<std::uint32_t>(std::floor(w[i]));
            EXPECT_TRUE(counts[i] == fl || counts[i] == fl + 1);
            extras += static_cast<int>(counts[i] - fl);
        }
        EXPECT_EQ(extras, 2);
    }
}

TEST(IntegerizeTrs, QuartersGiveOneIndividual) {
    const std::vector<double> w{0.25, 0.25, 0.25, 0.25};
    std::vector<int> hits(4, 0);
    constexpr int trials = 100000;
    for (int t = 0; t < trials; ++t) {
        Rng rng{static_cast<std::uint64_t>(t)};
        const auto counts = integerize_trs(w, rng);
        ASSERT_EQ(sum(counts), 1U);
        for (std::size_t i = 0; i < 4; ++i) {
            hits[i] += static_cast<int>(counts[i]);
        }
    }
    for (const auto h : hits) {
        EXPECT_NEAR(static_cast<double>(h) / trials, 0.25, 0.25 * 0.02);
    }
}

TEST(IntegerizeTrs, Errors) {
    Rng rng{1};
    EXPECT_THROW(integerize_trs(std::vector<double>{1.0, -0.5}, rng), ValidationError);
    EXPECT_THROW(integerize_trs(std::vector<double>{NAN}, rng), ValidationError);
    EXPECT_THROW(integerize_trs(std::vector<double>{INFINITY}, rng), ValidationError);
    EXPECT_TRUE(integerize_trs(std::vector<double>{}, rng).empty());
}

TEST(IntegerizeTrs, DeterministicPerSeed) {
    const std::vector<double> w{0.3, 1.7, 2.2, 0.9, 4.4};
    Rng a{99};
    Rng b{99};
    EXPECT_EQ(integerize_trs(w, a), integerize_trs(w, b));
}

TEST(IntegerizeTrs, CountBoundsOnRandomWeights) {
    std::mt19937_64 gen{5};
    std::uniform_real_distribution<double> weight{0.0, 8.0};
    for (int trial = 0; trial < 2000; ++trial) {
        const auto n = 1 + gen() % 40;
        std::vector<double> w(n);
        double total = 0.0;
        for (auto &x : w) {
            x = trial % 4 == 0 ? std::floor(weight(gen)) : weight(gen);
            total += x;
        }
        Rng rng{gen()};
        const auto counts = integerize_trs(w, rng);
        EXPECT_EQ(sum(counts), static_cast<std::uint64_t>(round_half_even(total)));
        for (std::size_t i = 0; i < n; ++i) {
            const auto fl = static_cast<std::uint32_t>(std::floor(w[i]));
            EXPECT_GE(counts[i], fl);
            EXPECT_LE(counts[i], fl + 1);
            if (w[i] == std::floor(w[i])) {
                EXPECT_EQ(counts[i], fl);
            }
        }
    }
}

TEST(IntegerizeTrs, SubsetLawMatchesSuccessiveSampling) {
    const std::vector<std::vector<double>> cases{{1.5, 1.5, 0.5, 0.5}, {0.1, 0.6, 0.3, 1.0, 2.5}, {0.9, 0.2, 0.7, 0.2}};
    constexpr int trials = 60000;
    for (const auto &w : cases) {
        std::vector<double> fracs;
        std::uint64_t floor_total = 0;
        double total = 0.0;
        for (const auto x : w) {
            fracs.push_back(x - std::floor(x));
            floor_total += static_cast<std::uint64_t>(std::floor(x));
            total += x;
        }
        const auto draws = static_cast<std::size_t>(round_half_even(total)) - floor_total;
        const auto law = oracle::successive_sampling_sets(fracs, draws);
        std::map<std::vector<std::size_t>, int> seen;
        for (int t = 0; t < trials; ++t) {
            Rng rng{static_cast<std::uint64_t>(t) * 7919U + 1U};
            const auto counts = integerize_trs(w, rng);
            std::vector<std::size_t> chosen;
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (counts[i] > static_cast<std::uint32_t>(std::floor(w[i]))) {
                    chosen.push_back(i);
                }
            }
            ++seen[chosen];
        }
        for (const auto &[set, count] : seen) {
            EXPECT_TRUE(law.contains(set));
        }
        for (const auto &[set, p] : law) {
            const double expected = static_cast<double>(p);
            const double freq = static_cast<double>(seen[set]) / trials;
            EXPECT_NEAR(freq, expected, 5.0 * std::sqrt(expected * (1.0 - expected) / trials) + 1e-9);
        }
    }
}
