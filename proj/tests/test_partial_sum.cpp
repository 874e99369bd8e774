#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sfid/oracle.hpp"
#include "sfid/partial_sum.hpp"

using namespace sfid;

namespace {

constexpr double kCTree = 3.0, kCGlob = 8.0;

PartialSumParams hand_params(std::uint64_t n, unsigned ell, unsigned t) {
    PartialSumParams p;
    p.n = n;
    p.ell = ell;
    p.t = t;
    p.branching = 2;
    p.h = t;
    return p;
}

std::vector<std::uint64_t> random_entries(std::mt19937_64& rng, std::uint64_t n, unsigned ell) {
    std::vector<std::uint64_t> a(n);
    for (auto& v : a) v = rng() & low_mask(ell);
    return a;
}

double size_budget(const PartialSumStructure& ps) {
    const PartialSumParams& p = ps.params();
    double lg = std::log2(double(std::max<std::uint64_t>(p.n, 2)));
    return double(p.blocks()) * (p.ell + ceil_log2(p.n) + kCTree) + double(ps.table_bits()) + kCGlob * lg;
}

}  // namespace

TEST(PartialSum, HandSplit) {
    std::vector<std::uint64_t> a{5, 0, 12};
    auto ps = build_partial_sum(a, hand_params(3, 5, 2));
    EXPECT_EQ(prefix_sum(ps, 1), 5u);
    EXPECT_EQ(prefix_sum(ps, 2), 5u);
    EXPECT_EQ(prefix_sum(ps, 3), 17u);
    // low_3 = 17 mod 8 = 1
    const Section& low = ps.sections().back();
    EXPECT_EQ(ps.payload().read_bits(low.offset + 2 * 3, 3), 1u);
    EXPECT_THROW(prefix_sum(ps, 0), RangeError);
    EXPECT_THROW(prefix_sum(ps, 4), RangeError);
}

TEST(PartialSum, AllZeros) {
    std::vector<std::uint64_t> a(100, 0);
    auto p = choose_partial_sum_params(100, 7, 2);
    auto ps = build_partial_sum(a, p);
    for (std::uint64_t i = 1; i <= 100; ++i) EXPECT_EQ(prefix_sum(ps, i), 0u);
    const Section& low = ps.sections().back();
    for (std::uint64_t i = 0; i < low.length; ++i) EXPECT_EQ(ps.payload().read_bits(low.offset + i, 1), 0u);
}

TEST(PartialSum, AllOnes) {
    std::uint64_t n = 1000;
    std::vector<std::uint64_t> a(n, 1);
    auto ps = build_partial_sum(a, choose_partial_sum_params(n, 10, 3));
    EXPECT_EQ(prefix_sum(ps, n), n);
}

TEST(PartialSum, ParamErrors) {
    EXPECT_THROW(choose_partial_sum_params(0, 8, 1), ParameterError);
    EXPECT_THROW(choose_partial_sum_params(1u << 10, 2, 1), ParameterError);   // below c_lo·log n
    EXPECT_THROW(choose_partial_sum_params(1u << 10, 50, 1), ParameterError);  // above c_hi·log n
    PartialSumOptions loose;
    loose.check_width = false;
    EXPECT_THROW(choose_partial_sum_params(1u << 10, 2, 2, loose), ParameterError);  // ℓ − h < 1
    auto p = choose_partial_sum_params(16, 4, 1);
    std::vector<std::uint64_t> bad(16, 3);
    bad[5] = 16;
    EXPECT_THROW(build_partial_sum(bad, p), DomainError);
}

TEST(PartialSum, DifferencesStayInAlphabet) {
    std::mt19937_64 rng(3);
    auto p = choose_partial_sum_params(5000, 13, 2);
    auto a = random_entries(rng, p.n, p.ell);
    auto ps = build_partial_sum(a, p);
    std::uint64_t s = p.low_bits(), x = 0;
    for (auto v : a) {
        std::uint64_t d = ((x + v) >> s) - (x >> s);
        EXPECT_TRUE(d == (v >> s) || d == (v >> s) + 1);
        EXPECT_LE(d, std::uint64_t{1} << p.h);
        x += v;
    }
    EXPECT_EQ(ps.tables().spec().sigma_size, (std::uint64_t{1} << p.h) + 1);
}

TEST(PartialSum, LargeInstanceWithinBudget) {
    std::mt19937_64 rng(4);
    std::uint64_t n = 1u << 14;
    for (unsigned t : {1u, 2u, 3u}) {
        auto p = choose_partial_sum_params(n, 14, t);
        auto a = random_entries(rng, n, p.ell);
        auto ps = build_partial_sum(a, p);
        double over = double(ps.payload().size()) - double(n * p.ell);
        EXPECT_LE(over, size_budget(ps)) << "t=" << t;
        auto want = oracle::prefix_sum(a, n);
        EXPECT_EQ(ps.prefix_sum(n), want);
    }
}

TEST(PartialSum, RandomizedAgainstOracle) {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 120; ++rep) {
        std::uint64_t n = 1 + rng() % 3000;
        unsigned lg = std::max(1u, ceil_log2(n));
        unsigned ell = (rng() % 2 ? 1 : 2) * lg + 2;
        unsigned t = 1 + rng() % 3;
        PartialSumOptions o;
        o.check_width = false;
        PartialSumParams p;
        try {
            p = choose_partial_sum_params(n, ell, t, o);
        } catch (const ParameterError&) {
            continue;
        }
        auto a = random_entries(rng, n, ell);
        if (rng() % 3 == 0) {
            for (auto& v : a) v = rng() % 3 == 0 ? 0 : v;
        }
        auto ps = build_partial_sum(a, p);
        std::uint64_t run = 0, prev = 0;
        for (std::uint64_t i = 1; i <= n; ++i) {
            run += a[i - 1];
            QueryStats st;
            std::uint64_t got = ps.prefix_sum(i, &st);
            ASSERT_EQ(got, run) << "n=" << n << " i=" << i;
            ASSERT_GE(got, prev);
            ASSERT_LE(st.tree_visits, t + 1u);
            prev = got;
        }
        EXPECT_LE(double(ps.payload().size()) - double(n * ell), size_budget(ps));
    }
}

TEST(PartialSum, ReloadAndCorruption) {
    std::mt19937_64 rng(6);
    auto p = choose_partial_sum_params(777, 20, 2);
    auto a = random_entries(rng, p.n, p.ell);
    auto ps = build_partial_sum(a, p);
    auto again = PartialSumStructure::load(p, ps.payload(), ps.sections());
    for (std::uint64_t i = 1; i <= p.n; ++i) ASSERT_EQ(again.prefix_sum(i), ps.prefix_sum(i));
    BitBuffer cut;
    cut.append(ps.payload(), 0, ps.payload().size() - 3);
    EXPECT_THROW(PartialSumStructure::load(p, cut), CorruptionError);
}
