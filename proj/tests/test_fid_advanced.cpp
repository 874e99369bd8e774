#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "sfid/fid_advanced.hpp"
#include "sfid/fid_basic.hpp"
#include "sfid/keygen.hpp"
#include "sfid/oracle.hpp"

using namespace sfid;

namespace {

std::vector<std::uint64_t> queries_around(const std::vector<std::uint64_t>& keys, std::uint64_t universe,
                                          std::mt19937_64& rng, int extra) {
    std::vector<std::uint64_t> qs{0, universe - 1};
    for (auto k : keys) {
        qs.push_back(k);
        if (k > 0) qs.push_back(k - 1);
        if (k + 1 < universe) qs.push_back(k + 1);
    }
    for (int i = 0; i < extra; ++i) qs.push_back(rng() % universe);
    return qs;
}

void expect_same_answers(const FidCore& a, const FidCore& basic, const std::vector<std::uint64_t>& keys,
                         std::mt19937_64& rng) {
    const FidParams& p = a.params();
    auto qs = queries_around(keys, p.universe, rng, 500);
    auto want = oracle::rank_batch(keys, qs);
    for (std::size_t i = 0; i < qs.size(); ++i) {
        QueryStats st;
        ASSERT_EQ(a.rank(qs[i], &st), want[i]) << "x=" << qs[i];
        ASSERT_EQ(basic.rank(qs[i]), want[i]);
        ASSERT_LE(st.tree_visits, 2u * (p.t + 1));
        ASSERT_LE(st.inner_tree_visits, 2u * (p.t_inner + 1));
    }
    for (std::uint64_t i = 1; i <= keys.size(); ++i) {
        QueryStats st;
        ASSERT_EQ(a.select(i, &st), keys[i - 1]) << "i=" << i;
        ASSERT_LE(st.tree_visits, 3u * (p.t + 1));
        ASSERT_LE(st.inner_tree_visits, p.t_inner + 1u);
    }
}

std::uint64_t section_length(const FidCore& f, const std::string& name) {
    for (const auto& s : f.sections()) {
        if (s.name == name) return s.length;
    }
    return ~std::uint64_t{0};
}

}  // namespace

TEST(UnifiedLow, LongIntervalFitsAndAnswers) {
    LowGeometry g{20, 16, 5};
    auto tables = inner_tables(g.t_inner);
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        auto vals = generate_keys(KeyDist::uniform, std::uint64_t{1} << 20, 17, rng());
        std::vector<std::uint64_t> deltas(17, 0);
        deltas[0] = 3;
        BitBuffer out;
        out.write_bits(0, 7);
        build_unified_low(out, deltas, vals, g, tables.get());
        ASSERT_EQ(out.size(), 7u + 20u * 17u);
        InnerFid inner(out, 7, 17, *tables, g);
        EXPECT_EQ(inner.decode(), vals);
        for (std::uint64_t j = 1; j <= 17; ++j) {
            QueryStats st;
            ASSERT_EQ(unified_select(out, 7, 1, 17, j, g, tables.get(), &st), vals[j - 1]);
            ASSERT_LE(st.inner_tree_visits, g.t_inner + 1u);
        }
        auto qs = queries_around(vals, std::uint64_t{1} << 20, rng, 200);
        auto want = oracle::rank_batch(vals, qs);
        for (std::size_t i = 0; i < qs.size(); ++i) {
            QueryStats st;
            ASSERT_EQ(unified_rank(out, 7, 1, 17, qs[i], g, tables.get(), &st), want[i]);
            ASSERT_LE(st.inner_tree_visits, 2u * (g.t_inner + 1));
            ASSERT_LE(st.inner_low_comparisons, 6u);
        }
    }
}

TEST(UnifiedLow, ShortIntervalsAreThePlainArray) {
    LowGeometry g{9, 4, 3};
    std::vector<std::uint64_t> deltas{1, 2, 1, 5, 7}, lows{300, 4, 511, 0, 77};
    BitBuffer unified, plain;
    build_unified_low(unified, deltas, lows, g, nullptr);
    for (auto v : lows) plain.write_bits(v, g.b);
    EXPECT_EQ(unified, plain);
}

TEST(UnifiedLow, MixedPartitionRoundTrips) {
    LowGeometry g{12, 2, 3};
    auto tables = inner_tables(g.t_inner);
    std::vector<std::uint64_t> deltas{4, 0, 0, 0, 0, 2, 1, 0, 3, 0, 0};
    std::vector<std::uint64_t> lows{5, 90, 1000, 2000, 4095, 7, 8, 9, 0, 1, 4000};
    BitBuffer out;
    build_unified_low(out, deltas, lows, g, tables.get());
    ASSERT_EQ(out.size(), 12u * lows.size());
    for (auto [first, last] : interval_partition(deltas)) {
        for (std::uint64_t j = first; j <= last; ++j) {
            EXPECT_EQ(unified_select(out, 0, first, last, j - first + 1, g, tables.get(), nullptr), lows[j - 1]);
            EXPECT_EQ(unified_rank(out, 0, first, last, lows[j - 1], g, tables.get(), nullptr), j);
        }
        EXPECT_EQ(unified_rank(out, 0, first, last, lows[first - 1] - (lows[first - 1] > 0), g, tables.get(),
                               nullptr),
                  first - (lows[first - 1] > 0));
    }
}

TEST(UnifiedLow, RejectsBadInput) {
    LowGeometry g{6, 1, 2};
    auto tables = inner_tables(g.t_inner);
    std::vector<std::uint64_t> deltas{1, 0}, lows{9, 9};
    BitBuffer out;
    EXPECT_THROW(build_unified_low(out, deltas, lows, g, tables.get()), BuildError);
    std::vector<std::uint64_t> ok{1, 5};
    BitBuffer out2;
    EXPECT_THROW(build_unified_low(out2, deltas, ok, g, nullptr), BuildError);
}

TEST(InterPartition, Examples) {
    std::vector<std::uint64_t> d{2, 0, 0, 1, 0, 3};
    auto parts = interval_partition(d);
    ASSERT_EQ(parts.size(), 3u);
    EXPECT_EQ(parts[0], std::make_pair(std::uint64_t{1}, std::uint64_t{3}));
    EXPECT_EQ(parts[1], std::make_pair(std::uint64_t{4}, std::uint64_t{5}));
    EXPECT_EQ(parts[2], std::make_pair(std::uint64_t{6}, std::uint64_t{6}));
}

TEST(AdvancedFid, SameFootprintAsBasic) {
    std::uint64_t universe = std::uint64_t{1} << 26;
    auto keys = generate_keys(KeyDist::clustered, universe, 4000, 21);
    ParamOptions o;
    o.l_thresh = 1;
    FidParams p = choose_params(universe, keys.size(), 2, o);
    auto adv = build_advanced(keys, p);
    auto basic = build_basic(keys, p);
    EXPECT_EQ(adv.payload().size(), basic.payload().size());
    EXPECT_EQ(section_length(adv, "low"), p.b * p.n);
    EXPECT_NE(adv.payload(), basic.payload());
    std::mt19937_64 rng(22);
    expect_same_answers(adv, basic, keys, rng);
}

TEST(AdvancedFid, DefaultThresholdMatchesBasicBits) {
    std::uint64_t universe = std::uint64_t{1} << 24;
    auto keys = generate_keys(KeyDist::uniform, universe, 3000, 23);
    FidParams p = choose_params(universe, keys.size(), 3, {});
    auto adv = build_advanced(keys, p);
    auto basic = build_basic(keys, p);
    EXPECT_EQ(adv.payload(), basic.payload());
    std::mt19937_64 rng(24);
    expect_same_answers(adv, basic, keys, rng);
}

TEST(AdvancedFid, RandomizedSmallThresholds) {
    std::mt19937_64 rng(25);
    int built = 0;
    for (int rep = 0; rep < 120; ++rep) {
        unsigned lu = 16 + rng() % 18;
        std::uint64_t universe = std::uint64_t{1} << lu;
        unsigned t = 1 + rng() % 3;
        std::uint64_t n = 1 + rng() % 500;
        ParamOptions o;
        o.l_thresh = 1 + rng() % 3;
        o.t_inner = 0;
        FidParams p;
        try {
            p = choose_params(universe, n, t, o);
        } catch (const ParameterError&) {
            continue;
        }
        KeyDist d = rng() % 2 ? KeyDist::clustered : KeyDist::dense_blocks;
        auto keys = generate_keys(d, universe, n, rng());
        FidCore adv;
        try {
            adv = build_advanced(keys, p);
        } catch (const BuildError& e) {
            // an inner FID that cannot fit in b·L bits is reported, never truncated
            ASSERT_NE(std::string(e.what()).find("l-thresh"), std::string::npos) << e.what();
            continue;
        }
        auto basic = build_basic(keys, p);
        ASSERT_EQ(adv.payload().size(), basic.payload().size());
        expect_same_answers(adv, basic, keys, rng);
        ++built;
    }
    EXPECT_GE(built, 60);
}

TEST(AdvancedFid, ReloadFromPayload) {
    std::uint64_t universe = std::uint64_t{1} << 22;
    auto keys = generate_keys(KeyDist::clustered, universe, 900, 26);
    ParamOptions o;
    o.l_thresh = 2;
    FidParams p = choose_params(universe, keys.size(), 2, o);
    auto adv = build_advanced(keys, p);
    auto again = FidCore::load(p, FidKind::advanced, adv.payload(), adv.sections());
    auto basic = build_basic(keys, p);
    std::mt19937_64 rng(27);
    expect_same_answers(again, basic, keys, rng);
}

TEST(AdvancedFid, BlockIntervalMatchesDefinition) {
    std::uint64_t universe = std::uint64_t{1} << 24;
    auto keys = generate_keys(KeyDist::clustered, universe, 1200, 28);
    FidParams p = choose_params(universe, keys.size(), 2, {});
    auto f = build_basic(keys, p);
    std::uint64_t bs = p.block_size();
    for (std::uint64_t k = 1; k <= f.blocks().size(); ++k) {
        std::uint64_t s = (k - 1) * bs, m = f.blocks()[k - 1].m;
        std::uint64_t base = k == 1 ? 0 : keys[s - 1];
        SplitBlock sb = split_block(std::span<const std::uint64_t>(keys).subspan(s, m), base, p);
        for (std::uint64_t v = 0; v <= sb.total + 1; ++v) {
            auto want = maximal_interval(sb.delta, v);
            auto got = f.block_interval(k, v);
            ASSERT_EQ(want.has_value(), got.has_value()) << "k=" << k << " v=" << v;
            if (want) {
                ASSERT_EQ(*want, *got);
            }
        }
    }
}
