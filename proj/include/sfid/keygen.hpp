#pragma once
// Deterministic key-set generators. Only raw mt19937_64 output is used, so a
// seed produces the same keys on every platform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "sfid/errors.hpp"

namespace sfid {

enum class KeyDist { uniform, clustered, dense_blocks };

inline KeyDist parse_dist(const std::string& s) {
    if (s == "uniform") return KeyDist::uniform;
    if (s == "clustered") return KeyDist::clustered;
    if (s == "dense-blocks") return KeyDist::dense_blocks;
    throw ParameterError("unknown distribution '" + s + "' (uniform|clustered|dense-blocks)");
}

inline const char* dist_name(KeyDist d) {
    switch (d) {
        case KeyDist::uniform: return "uniform";
        case KeyDist::clustered: return "clustered";
        case KeyDist::dense_blocks: return "dense-blocks";
    }
    return "?";
}

namespace detail {

inline std::uint64_t below(std::mt19937_64& rng, std::uint64_t bound) { return bound == 0 ? 0 : rng() % bound; }

inline std::vector<std::uint64_t> uniform_keys(std::mt19937_64& rng, std::uint64_t universe, std::uint64_t n) {
    if (n == universe) {
        std::vector<std::uint64_t> all(n);
        for (std::uint64_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    bool complement = n > universe / 2;
    std::uint64_t want = complement ? universe - n : n;
    std::unordered_set<std::uint64_t> picked;
    picked.reserve(want * 2);
    std::vector<std::uint64_t> order;
    order.reserve(want);
    while (order.size() < want) {
        std::uint64_t x = below(rng, universe);
        if (picked.insert(x).second) order.push_back(x);
    }
    std::vector<std::uint64_t> out;
    if (complement) {
        out.reserve(n);
        for (std::uint64_t x = 0; x < universe; ++x) {
            if (!picked.count(x)) out.push_back(x);
        }
    } else {
        out = std::move(order);
        std::sort(out.begin(), out.end());
    }
    return out;
}

// Places runs of the given lengths in [0, U) in order, at least one apart.
inline std::vector<std::uint64_t> run_starts(std::mt19937_64& rng, std::uint64_t universe,
                                             const std::vector<std::uint64_t>& lens) {
    std::uint64_t total = 0;
    for (auto l : lens) total += l;
    std::uint64_t runs = lens.size();
    std::uint64_t free = universe - total - (runs - 1);
    std::vector<std::uint64_t> gaps(runs);
    for (auto& g : gaps) g = below(rng, free + 1);
    std::sort(gaps.begin(), gaps.end());
    std::vector<std::uint64_t> starts(runs);
    std::uint64_t used = 0;
    for (std::uint64_t j = 0; j < runs; ++j) {
        starts[j] = gaps[j] + used + j;
        used += lens[j];
    }
    return starts;
}

inline std::vector<std::uint64_t> split_evenly(std::uint64_t n, std::uint64_t parts) {
    std::vector<std::uint64_t> lens(parts, n / parts);
    for (std::uint64_t j = 0; j < n % parts; ++j) ++lens[j];
    return lens;
}

}  // namespace detail

// Sorted distinct keys in [0, U).
//   uniform:      n keys drawn uniformly
//   clustered:    ⌈√n⌉ runs of consecutive integers
//   dense-blocks: windows of 2·64 positions, each holding 64 random keys
inline std::vector<std::uint64_t> generate_keys(KeyDist dist, std::uint64_t universe, std::uint64_t n,
                                                std::uint64_t seed) {
    if (n > universe) throw ParameterError("cannot draw " + std::to_string(n) + " keys from universe " +
                                           std::to_string(universe));
    if (n == 0) return {};
    std::mt19937_64 rng(seed);
    if (dist == KeyDist::uniform || n == universe) return detail::uniform_keys(rng, universe, n);
    if (dist == KeyDist::clustered) {
        std::uint64_t runs = static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
        while (runs > 1 && n + runs - 1 > universe) --runs;
        auto lens = detail::split_evenly(n, runs);
        auto starts = detail::run_starts(rng, universe, lens);
        std::vector<std::uint64_t> out;
        out.reserve(n);
        for (std::uint64_t j = 0; j < runs; ++j) {
            for (std::uint64_t i = 0; i < lens[j]; ++i) out.push_back(starts[j] + i);
        }
        return out;
    }
    const std::uint64_t per = 64;
    std::uint64_t windows = (n + per - 1) / per;
    auto counts = detail::split_evenly(n, windows);
    std::vector<std::uint64_t> widths(windows);
    for (std::uint64_t j = 0; j < windows; ++j) widths[j] = 2 * counts[j];
    if (2 * n + windows - 1 > universe) return detail::uniform_keys(rng, universe, n);
    auto starts = detail::run_starts(rng, universe, widths);
    std::vector<std::uint64_t> out;
    out.reserve(n);
    for (std::uint64_t j = 0; j < windows; ++j) {
        auto inside = detail::uniform_keys(rng, widths[j], counts[j]);
        for (auto x : inside) out.push_back(starts[j] + x);
    }
    return out;
}

}  // namespace sfid
