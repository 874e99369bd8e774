#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "sfid/oracle.hpp"
#include "sfid/predecessor.hpp"

using namespace sfid;

namespace {

constexpr double kCPred = 16.0;
constexpr double kC1 = 2.0, kC2 = 8.0, kC3 = 2.0, kC4 = 6.0;

std::vector<std::uint64_t> random_keys(std::mt19937_64& rng, std::size_t n, std::uint64_t universe) {
    std::set<std::uint64_t> s;
    while (s.size() < n) s.insert(rng() % universe);
    return {s.begin(), s.end()};
}

double sparse_budget(std::uint64_t universe, std::uint64_t n) {
    double ratio = std::max(double(universe) / double(n), 4.0);
    return kC1 * std::log2(std::log2(ratio)) + kC2;
}

double dense_budget(unsigned t) { return kC3 * std::log2(double(t + 1)) + kC4; }

void check_against_oracle(const AssocKeyMap& m, const std::vector<std::uint64_t>& keys,
                          const std::vector<std::uint64_t>& values, std::uint64_t universe,
                          std::mt19937_64& rng, int queries, double budget) {
    for (int q = 0; q < queries; ++q) {
        std::uint64_t x;
        switch (q % 4) {
            case 0: x = keys[rng() % keys.size()]; break;
            case 1: x = keys[rng() % keys.size()] - (keys[0] > 0 ? 1 : 0); break;
            default: x = rng() % universe;
        }
        QueryStats st;
        auto p = m.pred(x, &st);
        auto want = oracle::pred(keys, x);
        ASSERT_EQ(p.has_value(), want.has_value()) << "x=" << x;
        if (p) {
            ASSERT_EQ(p->index, *want);
            ASSERT_EQ(p->key, keys[*want]);
            ASSERT_EQ(p->value, values[*want]);
        }
        ASSERT_LE(double(st.pred_probes), budget);
        ASSERT_LE(st.pred_probes, m.worst_case_probes());
        QueryStats st2;
        auto s = m.succ(x, &st2);
        auto want_s = oracle::succ(keys, x);
        ASSERT_EQ(s.has_value(), want_s.has_value()) << "x=" << x;
        if (s) {
            ASSERT_EQ(s->key, keys[*want_s]);
        }
        ASSERT_LE(double(st2.pred_probes), budget);
    }
}

}  // namespace

TEST(AssocKeyMap, TwoKeys) {
    std::vector<std::uint64_t> k{3, 7}, v{10, 11};
    auto m = AssocKeyMap::build(k, v, 16, 16);
    EXPECT_EQ(m.size(), 2u);
    EXPECT_FALSE(m.pred(2).has_value());
    EXPECT_EQ(m.pred(5)->value, 10u);
    EXPECT_EQ(m.pred(15)->key, 7u);
}

TEST(AssocKeyMap, IdentityMap) {
    std::vector<std::uint64_t> k(100);
    for (std::uint64_t i = 0; i < 100; ++i) k[i] = i;
    for (PredMode mode : {PredMode::sparse, PredMode::dense}) {
        auto m = AssocKeyMap::build(k, k, 100, 100, mode, 1);
        for (std::uint64_t x = 0; x < 100; ++x) {
            auto p = m.pred(x);
            ASSERT_TRUE(p);
            EXPECT_EQ(p->key, x);
            EXPECT_EQ(p->value, x);
        }
    }
}

TEST(AssocKeyMap, SmallExamples) {
    std::vector<std::uint64_t> k{3, 7, 9}, v{30, 70, 90};
    for (PredMode mode : {PredMode::sparse, PredMode::dense}) {
        auto m = AssocKeyMap::build(k, v, 16, 100, mode, 1);
        EXPECT_EQ(m.pred(7)->key, 7u);
        EXPECT_EQ(m.pred(7)->value, 70u);
        EXPECT_FALSE(m.pred(2));
        EXPECT_EQ(m.succ(7)->key, 9u);
        EXPECT_EQ(m.succ(7)->value, 90u);
        EXPECT_FALSE(m.succ(9));
        EXPECT_EQ(m.succ(0)->key, 3u);
    }
}

TEST(AssocKeyMap, BuildErrors) {
    std::vector<std::uint64_t> unsorted{5, 3}, dup{3, 3}, v{0, 0};
    EXPECT_THROW(AssocKeyMap::build(unsorted, v, 16, 1), BuildError);
    EXPECT_THROW(AssocKeyMap::build(dup, v, 16, 1), BuildError);
    std::vector<std::uint64_t> big{3, 20};
    EXPECT_THROW(AssocKeyMap::build(big, v, 16, 1), BuildError);
    std::vector<std::uint64_t> k{1, 2}, badv{0, 9};
    EXPECT_THROW(AssocKeyMap::build(k, badv, 16, 4), BuildError);
    std::vector<std::uint64_t> sparse{0, 1u << 30};
    EXPECT_THROW(AssocKeyMap::build(sparse, v, std::uint64_t{1} << 31, 1, PredMode::dense, 2), ModeError);
}

TEST(AssocKeyMap, RandomSparseMatchesOracle) {
    std::mt19937_64 rng(1);
    std::uint64_t universe = std::uint64_t{1} << 24;
    auto keys = random_keys(rng, 10000, universe);
    std::vector<std::uint64_t> values(keys.size());
    for (auto& v : values) v = rng() % 1000;
    auto m = AssocKeyMap::build(keys, values, universe, 1000);
    // Sorted query sweep against the batch oracle.
    std::vector<std::uint64_t> qs(100000);
    for (auto& q : qs) q = rng() % universe;
    auto ranks = oracle::rank_batch(keys, qs);
    double budget = sparse_budget(universe, keys.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
        QueryStats st;
        auto p = m.pred(qs[i], &st);
        if (ranks[i] == 0) {
            ASSERT_FALSE(p);
        } else {
            ASSERT_TRUE(p);
            ASSERT_EQ(p->index, ranks[i] - 1);
            ASSERT_EQ(p->value, values[ranks[i] - 1]);
        }
        ASSERT_LE(double(st.pred_probes), budget);
    }
    check_against_oracle(m, keys, values, universe, rng, 2000, budget);
    double bits = double(m.size_bits(64));
    EXPECT_LE(bits, kCPred * keys.size() * (std::log2(double(universe)) + std::log2(1000.0)));
}

TEST(AssocKeyMap, SparseAcrossDensities) {
    std::mt19937_64 rng(2);
    for (unsigned lu : {6u, 12u, 20u, 33u, 48u, 63u}) {
        for (std::size_t n : {1u, 2u, 5u, 64u, 700u}) {
            std::uint64_t universe = std::uint64_t{1} << lu;
            if (n > universe) continue;
            auto keys = random_keys(rng, n, universe);
            std::vector<std::uint64_t> values(n, 1);
            auto m = AssocKeyMap::build(keys, values, universe, 2);
            check_against_oracle(m, keys, values, universe, rng, 500, sparse_budget(universe, n));
        }
    }
}

TEST(AssocKeyMap, DenseMatchesOracle) {
    std::mt19937_64 rng(3);
    for (unsigned t : {1u, 2u, 3u, 4u}) {
        std::size_t n = 3000;
        std::uint64_t beta = std::max<std::uint64_t>(8, ceil_log2(n));
        std::uint64_t universe = n;
        for (unsigned i = 0; i < t; ++i) universe *= beta;
        auto keys = random_keys(rng, n, universe);
        std::vector<std::uint64_t> values(n);
        for (auto& v : values) v = rng() % 77;
        auto m = AssocKeyMap::build(keys, values, universe, 77, PredMode::dense, t);
        check_against_oracle(m, keys, values, universe, rng, 20000, dense_budget(t));
        double bits = double(m.size_bits(64));
        EXPECT_LE(bits, kCPred * n * (std::log2(double(universe)) + std::log2(77.0)));
    }
}

TEST(AssocKeyMap, ClusteredKeys) {
    std::mt19937_64 rng(4);
    std::vector<std::uint64_t> keys;
    for (std::uint64_t c = 0; c < 20; ++c) {
        std::uint64_t base = c << 36;
        for (std::uint64_t j = 0; j < 50; ++j) keys.push_back(base + j * 3);
    }
    std::vector<std::uint64_t> values(keys.size(), 0);
    std::uint64_t universe = std::uint64_t{1} << 41;
    auto m = AssocKeyMap::build(keys, values, universe, 1);
    check_against_oracle(m, keys, values, universe, rng, 5000, sparse_budget(universe, keys.size()));
}

TEST(AssocKeyMap, SerializeRoundTrip) {
    std::mt19937_64 rng(5);
    std::uint64_t universe = 1u << 20;
    auto keys = random_keys(rng, 500, universe);
    std::vector<std::uint64_t> values(keys.size());
    for (auto& v : values) v = rng() % 300;
    for (PredMode mode : {PredMode::sparse, PredMode::dense}) {
        auto m = AssocKeyMap::build(keys, values, universe, 300, mode, 4);
        BitBuffer b;
        m.serialize(b, 40);
        EXPECT_EQ(b.size(), m.size_bits(40));
        BitReader r(b);
        auto back = AssocKeyMap::deserialize(r, 40);
        EXPECT_EQ(r.remaining(), 0u);
        EXPECT_TRUE(back == m);
        for (int q = 0; q < 2000; ++q) {
            std::uint64_t x = rng() % universe;
            auto a = m.pred(x), c = back.pred(x);
            ASSERT_EQ(a.has_value(), c.has_value());
            if (a) {
                ASSERT_EQ(a->key, c->key);
            }
        }
    }
}

TEST(AssocKeyMap, BodyRoundTripWithKnownHeader) {
    std::mt19937_64 rng(6);
    for (std::size_t n : {1u, 3u, 40u}) {
        auto keys = random_keys(rng, n, 5000);
        std::vector<std::uint64_t> values(n);
        for (auto& v : values) v = rng() % 9;
        auto m = AssocKeyMap::build(keys, values, 5000, 9);
        BitBuffer b;
        m.serialize_body(b);
        EXPECT_EQ(b.size(), m.body_bits());
        BitReader r(b);
        auto back = AssocKeyMap::deserialize_body(r, n, 5000, 9, PredMode::sparse, 1);
        EXPECT_EQ(r.remaining(), 0u);
        EXPECT_TRUE(back == m);
        check_against_oracle(back, keys, values, 5000, rng, 400, sparse_budget(5000, n));
    }
}

TEST(AssocKeyMap, SingleBucketHasNoIndex) {
    std::vector<std::uint64_t> keys{17, 900, 40000}, values{0, 0, 0};
    auto m = AssocKeyMap::build(keys, values, 1u << 20, 1);
    EXPECT_EQ(m.body_bits(), 3u * 20u);
}
