#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sfid/bitio.hpp"

using namespace sfid;

TEST(BitBuffer, WriteFiveInThreeBits) {
    BitBuffer b = write_bits(BitBuffer{}, 5, 3);
    EXPECT_EQ(b.size(), 3u);
    EXPECT_EQ(b.to_string(), "101");
    EXPECT_EQ(read_bits(b, 0, 3), 5u);
}

TEST(BitBuffer, ZeroWidthIsIdentity) {
    BitBuffer b = write_bits(BitBuffer{}, 0, 0);
    EXPECT_EQ(b.size(), 0u);
    EXPECT_EQ(read_bits(b, 0, 0), 0u);
    BitBuffer c = write_bits(BitBuffer{}, 5, 3);
    for (std::size_t k = 0; k <= 3; ++k) EXPECT_EQ(read_bits(c, k, 0), 0u);
}

TEST(BitBuffer, RejectsOversizedValue) {
    BitBuffer b;
    EXPECT_THROW(b.write_bits(8, 3), DomainError);
    EXPECT_THROW(b.write_bits(1, 0), DomainError);
    EXPECT_THROW(b.write_bits(0, 65), DomainError);
}

TEST(BitBuffer, RejectsOutOfBoundsRead) {
    BitBuffer b = write_bits(BitBuffer{}, 5, 3);
    EXPECT_THROW(read_bits(b, 1, 3), RangeError);
    EXPECT_THROW(read_bits(b, 4, 0), RangeError);
}

TEST(BitBuffer, RandomRoundTrip) {
    std::mt19937_64 rng(7);
    std::vector<std::pair<std::uint64_t, unsigned>> fields;
    BitBuffer b;
    std::size_t total = 0;
    for (int i = 0; i < 1000; ++i) {
        unsigned w = static_cast<unsigned>(rng() % 65);
        std::uint64_t v = w == 0 ? 0 : (w == 64 ? rng() : rng() & ((std::uint64_t{1} << w) - 1));
        b.write_bits(v, w);
        fields.emplace_back(v, w);
        total += w;
    }
    ASSERT_EQ(b.size(), total);
    std::size_t off = 0;
    for (auto [v, w] : fields) {
        EXPECT_EQ(b.read_bits(off, w), v);
        off += w;
    }
    BitReader r(b);
    for (auto [v, w] : fields) EXPECT_EQ(r.read(w), v);
    EXPECT_EQ(r.remaining(), 0u);
}

TEST(BitBuffer, ReadsIgnoreNeighbouringFields) {
    BitBuffer a, b;
    a.write_bits(0, 7);
    a.write_bits(0x5a, 8);
    a.write_bits(0, 9);
    b.write_bits(0x7f, 7);
    b.write_bits(0x5a, 8);
    b.write_bits(0x1ff, 9);
    EXPECT_EQ(a.read_bits(7, 8), 0x5au);
    EXPECT_EQ(b.read_bits(7, 8), 0x5au);
}

TEST(BitBuffer, ByteImageRoundTrip) {
    std::mt19937_64 rng(11);
    BitBuffer b;
    for (int i = 0; i < 100; ++i) b.write_bits(rng() & 0x1fff, 13);
    auto bytes = b.to_bytes();
    BitBuffer c = BitBuffer::from_bytes(bytes.data(), bytes.size(), b.size());
    EXPECT_EQ(b, c);
}

TEST(BitBuffer, AppendSlices) {
    BitBuffer a;
    for (unsigned i = 0; i < 50; ++i) a.write_bits(i % 8, 3);
    BitBuffer c;
    c.append(a, 3, 130);
    ASSERT_EQ(c.size(), 130u);
    for (std::size_t k = 0; k < 130; ++k) EXPECT_EQ(c.bit(k), a.bit(k + 3));
}

TEST(Spill, PowerOfTwoDomain) {
    SpillCode c = spill_encode(5, 8, 1);
    EXPECT_EQ(c.memory_width, 3u);
    EXPECT_EQ(c.spill_universe, 1u);
    EXPECT_EQ(c.memory_bits, 5u);
    EXPECT_EQ(write_bits(BitBuffer{}, c.memory_bits, c.memory_width).to_string(), "101");
    EXPECT_EQ(c.spill, 0u);
    EXPECT_EQ(spill_decode(c, 8), 5u);
}

TEST(Spill, DomainFitsInOneSpill) {
    SpillCode c = spill_encode(2, 3, 2);
    EXPECT_EQ(c.memory_width, 0u);
    EXPECT_EQ(c.spill_universe, 3u);
    EXPECT_EQ(c.spill, 2u);
    EXPECT_EQ(spill_decode(c, 3), 2u);
}

TEST(Spill, TwelveWithMinimumTwo) {
    SpillCode c = spill_encode(7, 12, 2);
    EXPECT_EQ(c.memory_width, 2u);
    EXPECT_EQ(c.spill_universe, 3u);
    EXPECT_EQ(c.spill, 1u);
    EXPECT_EQ(write_bits(BitBuffer{}, c.memory_bits, 2).to_string(), "11");
    EXPECT_EQ(spill_decode(c, 12), 7u);
    for (std::uint64_t x = 0; x < 12; ++x) EXPECT_EQ(spill_decode(spill_encode(x, 12, 2), 12), x);
}

TEST(Spill, SingletonDomain) {
    SpillCode c = spill_encode(0, 1, 4);
    EXPECT_EQ(c.memory_width, 0u);
    EXPECT_EQ(c.spill_universe, 1u);
    EXPECT_EQ(spill_decode(c, 1), 0u);
}

TEST(Spill, Errors) {
    EXPECT_THROW(spill_encode(12, 12, 2), DomainError);
    SpillCode c = spill_encode(11, 12, 2);
    c.spill = c.spill_universe;
    EXPECT_THROW(spill_decode(c, 12), CorruptionError);
    SpillCode d{3, 2, 2, 3};  // 2·4 + 3 = 11 >= 10
    EXPECT_THROW(spill_decode(d, 10), CorruptionError);
}

// Exhaustive over a reduced range; the acceptance binary covers N ≤ 2^16.
TEST(Spill, ExhaustiveSmallDomains) {
    for (std::uint64_t k_min : {1u, 2u, 4u, 8u}) {
        for (std::uint64_t n = 1; n <= 700; ++n) {
            SpillShape s = spill_shape(n, k_min);
            ASSERT_GE((std::uint64_t{1} << s.memory_width) * s.spill_universe, n);
            if (n > k_min) {
                ASSERT_GE(s.spill_universe, k_min);
                ASSERT_LT(s.spill_universe, 2 * k_min);
            } else {
                ASSERT_EQ(s.memory_width, 0u);
                ASSERT_EQ(s.spill_universe, n);
            }
            double slack = s.memory_width + std::log2(double(s.spill_universe)) - std::log2(double(n));
            ASSERT_LE(slack, 2.0 / double(k_min) + 1e-12);
            for (std::uint64_t x = 0; x < n; ++x) {
                ASSERT_EQ(spill_decode(spill_encode(x, n, k_min), n), x);
            }
        }
    }
}
