#pragma once
// Brute-force references. Nothing here shares code with the structures under
// test beyond the ABTreeSpec type.

#include <gmp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sfid/abtree.hpp"
#include "sfid/errors.hpp"

namespace sfid::oracle {

// Number of keys <= x, by linear scan.
inline std::uint64_t rank(std::span<const std::uint64_t> keys, std::uint64_t x) {
    std::uint64_t c = 0;
    for (std::uint64_t k : keys) c += k <= x;
    return c;
}

// i-th smallest key (1-based), by linear scan over the sorted array.
inline std::uint64_t select(std::span<const std::uint64_t> keys, std::uint64_t i) {
    if (i == 0 || i > keys.size()) throw RangeError("oracle select: index out of range");
    std::uint64_t seen = 0;
    for (std::uint64_t k : keys) {
        if (++seen == i) return k;
    }
    return 0;
}

// Σ_{j<=i} a_j (1-based, i = 0 gives 0).
inline std::uint64_t prefix_sum(std::span<const std::uint64_t> a, std::uint64_t i) {
    if (i > a.size()) throw RangeError("oracle prefix_sum: index out of range");
    std::uint64_t s = 0;
    for (std::uint64_t j = 0; j < i; ++j) s += a[j];
    return s;
}

// Largest key <= x and smallest key > x as positions, by linear scan.
inline std::optional<std::size_t> pred(std::span<const std::uint64_t> keys, std::uint64_t x) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i] <= x) best = i;
    }
    return best;
}

inline std::optional<std::size_t> succ(std::span<const std::uint64_t> keys, std::uint64_t x) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i] > x) return i;
    }
    return std::nullopt;
}

// Answers rank for a batch of queries in one sorted sweep; same results as
// rank() called per query, fast enough for million-query workloads.
inline std::vector<std::uint64_t> rank_batch(std::span<const std::uint64_t> keys,
                                             std::span<const std::uint64_t> queries) {
    std::vector<std::size_t> order(queries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return queries[a] < queries[b]; });
    std::vector<std::uint64_t> out(queries.size());
    std::size_t k = 0;
    for (std::size_t i : order) {
        while (k < keys.size() && keys[k] <= queries[i]) ++k;
        out[i] = k;
    }
    return out;
}

namespace detail {

inline std::optional<Label> root_label(const ABTreeSpec& spec, unsigned height,
                                       std::span<const std::uint64_t> leaves) {
    if (height == 0) return spec.leaf_label(leaves[0]);
    std::uint64_t child = 1;
    for (unsigned i = 1; i < height; ++i) child *= spec.branching;
    std::vector<Label> labels;
    for (std::size_t pos = 0; pos < leaves.size(); pos += child) {
        std::size_t len = std::min<std::size_t>(child, leaves.size() - pos);
        auto l = root_label(spec, height - 1, leaves.subspan(pos, len));
        if (!l || *l >= spec.phi_size) return std::nullopt;
        labels.push_back(*l);
    }
    return spec.transition(std::span<const Label>(labels));
}

}  // namespace detail

// Bottom-up label of a leaf array under the canonical first-m-leaves shape.
inline std::optional<Label> label_of(const ABTreeSpec& spec, std::span<const std::uint64_t> leaves) {
    auto l = detail::root_label(spec, spec.height, leaves);
    if (l && *l >= spec.phi_size) return std::nullopt;
    return l;
}

// Number of m-leaf arrays whose root label is phi, by enumerating Σ^m.
inline BigCount count_instances(const ABTreeSpec& spec, std::uint64_t m, Label phi,
                                std::uint64_t cap = std::uint64_t{1} << 24) {
    long double total = 1;
    for (std::uint64_t i = 0; i < m; ++i) total *= static_cast<long double>(spec.sigma_size);
    if (total > static_cast<long double>(cap)) throw RangeError("oracle count_instances: enumeration cap exceeded");
    std::vector<std::uint64_t> leaves(m, 0);
    BigCount count = 0;
    for (;;) {
        auto l = label_of(spec, leaves);
        if (l && *l == phi) ++count;
        std::size_t i = m;
        while (i > 0) {
            if (++leaves[i - 1] < spec.sigma_size) break;
            leaves[i - 1] = 0;
            --i;
        }
        if (i == 0) break;
    }
    return count;
}

// ⌈log2 C(U, n)⌉ with exact integer arithmetic.
inline std::uint64_t info_theoretic_optimum(std::uint64_t universe, std::uint64_t n) {
    if (n > universe) throw RangeError("info_theoretic_optimum: n > U");
    mpz_t c;
    mpz_init(c);
    mpz_bin_uiui(c, universe, std::min(n, universe - n));
    std::uint64_t bits = 0;
    if (mpz_cmp_ui(c, 1) > 0) {
        mpz_sub_ui(c, c, 1);
        bits = mpz_sizeinbase(c, 2);
    }
    mpz_clear(c);
    return bits;
}

// log2 C(U, n) as a real number, for reporting.
inline double log2_binomial(std::uint64_t universe, std::uint64_t n) {
    if (n > universe) throw RangeError("log2_binomial: n > U");
    mpz_t c;
    mpz_init(c);
    mpz_bin_uiui(c, universe, std::min(n, universe - n));
    long exp = 0;
    double mant = mpz_get_d_2exp(&exp, c);
    mpz_clear(c);
    return std::log2(mant) + static_cast<double>(exp);
}

}  // namespace sfid::oracle
