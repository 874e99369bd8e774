#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "sfid/oracle.hpp"

using namespace sfid;

TEST(Oracle, RankAndSelect) {
    std::vector<std::uint64_t> k{3, 7, 9};
    EXPECT_EQ(oracle::rank(k, 7), 2u);
    EXPECT_EQ(oracle::rank(k, 2), 0u);
    EXPECT_EQ(oracle::select(k, 1), 3u);
    EXPECT_EQ(oracle::select(k, 3), 9u);
    EXPECT_THROW(oracle::select(k, 0), RangeError);
    EXPECT_THROW(oracle::select(k, 4), RangeError);
}

TEST(Oracle, PrefixSum) {
    std::vector<std::uint64_t> a{4, 0, 2, 5};
    EXPECT_EQ(oracle::prefix_sum(a, 0), 0u);
    EXPECT_EQ(oracle::prefix_sum(a, 3), 6u);
    EXPECT_THROW(oracle::prefix_sum(a, 5), RangeError);
}

TEST(Oracle, PermutedInputGivesSameAnswers) {
    std::mt19937_64 rng(9);
    std::vector<std::uint64_t> k{40, 2, 17, 99, 5, 63};
    std::vector<std::uint64_t> a = k, b = k;
    std::shuffle(b.begin(), b.end(), rng);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (std::uint64_t x = 0; x < 110; ++x) EXPECT_EQ(oracle::rank(a, x), oracle::rank(b, x));
    for (std::uint64_t i = 1; i <= k.size(); ++i) EXPECT_EQ(oracle::select(a, i), oracle::select(b, i));
}

TEST(Oracle, BatchRankMatchesScan) {
    std::mt19937_64 rng(10);
    std::vector<std::uint64_t> k;
    for (std::uint64_t i = 0; i < 300; ++i) k.push_back(i * 7 + rng() % 5);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    std::vector<std::uint64_t> q(2000);
    for (auto& x : q) x = rng() % 2200;
    auto r = oracle::rank_batch(k, q);
    for (std::size_t i = 0; i < q.size(); ++i) EXPECT_EQ(r[i], oracle::rank(k, q[i]));
}

TEST(Oracle, CountInstances) {
    auto spec = make_sum_spec(2, 1, 4, 7);
    EXPECT_EQ(oracle::count_instances(spec, 2, 3), 4);
    EXPECT_EQ(oracle::count_instances(spec, 2, 6), 1);
    EXPECT_EQ(oracle::count_instances(make_sum_spec(2, 1, 4, 100), 2, 50), 0);
}

TEST(Oracle, InformationTheoreticOptimum) {
    EXPECT_EQ(oracle::info_theoretic_optimum(1000, 0), 0u);
    EXPECT_EQ(oracle::info_theoretic_optimum(16, 3), 10u);
    EXPECT_EQ(oracle::info_theoretic_optimum(1000, 1000), 0u);
    EXPECT_EQ(oracle::info_theoretic_optimum(16, 1), 4u);
    EXPECT_EQ(oracle::info_theoretic_optimum(17, 1), 5u);
    EXPECT_THROW(oracle::info_theoretic_optimum(3, 4), RangeError);
    EXPECT_NEAR(oracle::log2_binomial(16, 3), std::log2(560.0), 1e-9);
}
