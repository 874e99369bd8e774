#pragma once
// Low-part region of one block, b·m bits, cut along the maximal intervals of
// the block's difference sequence. An interval [i1, i2] of length L occupies
// bits [(i1 − 1)·b, i2·b). Short intervals (L ≤ L_thrd) hold their b-bit low
// values as a sorted array; long ones hold an embedded FID over [2^b], zero
// padded to b·L bits.
//
// Embedded FID over L sorted distinct values y_1 < … < y_L in [2^b], with
// g = t_inner and b_in = b − g:
//   [ u_L : g bits ][ aB-tree code over u_i − u_{i−1} ][ L × b_in low bits ][ 0 … ]
// where u_i = y_i >> b_in < 2^g. The tree is binary of height g with leaf and
// label alphabet [2^g], so it covers up to 2^g ≥ B^t values and needs no high
// part.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "sfid/abtree.hpp"
#include "sfid/bitio.hpp"
#include "sfid/errors.hpp"
#include "sfid/stats.hpp"

namespace sfid {

inline std::shared_ptr<const CountTables> shared_sum_tables(unsigned branching, unsigned height,
                                                            std::uint64_t sigma, std::uint64_t phi) {
    struct Key {
        unsigned b, t;
        std::uint64_t s, p;
        bool operator<(const Key& o) const { return std::tie(b, t, s, p) < std::tie(o.b, o.t, o.s, o.p); }
    };
    static std::mutex mu;
    static std::map<Key, std::shared_ptr<const CountTables>> cache;
    std::lock_guard<std::mutex> lock(mu);
    Key k{branching, height, sigma, phi};
    if (auto it = cache.find(k); it != cache.end()) return it->second;
    auto tables = std::make_shared<const CountTables>(
        build_count_tables(make_sum_spec(branching, height, sigma, phi)));
    cache.emplace(k, tables);
    return tables;
}

inline std::shared_ptr<const CountTables> inner_tables(unsigned t_inner) {
    std::uint64_t g = std::uint64_t{1} << t_inner;
    return shared_sum_tables(2, t_inner, g, g);
}

struct LowGeometry {
    unsigned b = 1;
    std::uint64_t l_thresh = 1;
    unsigned t_inner = 1;
    unsigned low_in() const { return b > t_inner ? b - t_inner : 0; }
};

// Bits an embedded FID over `values` needs before padding.
inline std::uint64_t inner_fid_bits(const CountTables& tables, const LowGeometry& g,
                                    std::span<const std::uint64_t> values) {
    unsigned shift = g.low_in();
    std::uint64_t top = values.back() >> shift;
    return g.t_inner + tables.code_bits(values.size(), static_cast<Label>(top)) + values.size() * shift;
}

// Appends the padded embedded FID for one long interval. Throws BuildError
// when it would not fit in b·L bits.
inline void write_inner_fid(BitBuffer& out, const CountTables& tables, const LowGeometry& g,
                            std::span<const std::uint64_t> values) {
    std::uint64_t len = values.size();
    if (len > (std::uint64_t{1} << g.t_inner)) {
        throw BuildError("embedded FID: interval of " + std::to_string(len) + " keys exceeds 2^t_inner");
    }
    unsigned shift = g.low_in();
    std::uint64_t need = inner_fid_bits(tables, g, values);
    if (need > g.b * len) {
        throw BuildError("embedded FID needs " + std::to_string(need) + " bits but the interval has " +
                         std::to_string(g.b * len) + "; raise L_thrd (--l-thresh)");
    }
    std::vector<std::uint64_t> diffs(len);
    std::uint64_t prev = 0;
    for (std::uint64_t i = 0; i < len; ++i) {
        std::uint64_t u = values[i] >> shift;
        diffs[i] = u - prev;
        prev = u;
    }
    std::size_t start = out.size();
    out.write_bits(prev, g.t_inner);
    EncodedABTree enc = tables.encode(diffs);
    out.append(enc.code);
    std::uint64_t mask = shift == 0 ? 0 : (shift == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << shift) - 1);
    for (std::uint64_t v : values) out.write_bits(v & mask, shift);
    out.pad(start + g.b * len - out.size());
}

// Read-only view of one embedded FID inside a larger buffer.
class InnerFid {
public:
    InnerFid(const BitBuffer& buf, std::size_t offset, std::uint64_t len, const CountTables& tables,
             const LowGeometry& g)
        : buf_(&buf), tables_(&tables), len_(len), shift_(g.low_in()) {
        top_ = buf.read_bits(offset, g.t_inner);
        cv_.bits = &buf;
        cv_.offset = offset + g.t_inner;
        cv_.m = len;
        cv_.root_label = static_cast<Label>(top_);
        cv_.length = tables.code_bits(len, cv_.root_label);
        low_off_ = cv_.offset + cv_.length;
    }

    std::uint64_t size() const { return len_; }

    // Number of stored values <= v.
    std::uint64_t rank(std::uint64_t v, QueryStats* st) const {
        std::uint64_t thr = v >> shift_;
        std::uint64_t* visits = st ? &st->inner_tree_visits : nullptr;
        auto [hi, pre] = tree_rank(*tables_, cv_, thr, visits);
        if (pre < thr) return hi;
        std::uint64_t first = thr == 0 ? 1 : tree_rank(*tables_, cv_, thr - 1, visits).first + 1;
        std::uint64_t target = shift_ == 0 ? 0 : v & ((std::uint64_t{1} << shift_) - 1);
        // largest i in [first, hi] with low_i <= target
        std::uint64_t lo = first, up = hi, ans = first - 1;
        while (lo <= up) {
            std::uint64_t mid = lo + (up - lo) / 2;
            if (st) ++st->inner_low_comparisons;
            if (low(mid) <= target) {
                ans = mid;
                lo = mid + 1;
            } else {
                up = mid - 1;
            }
        }
        return ans;
    }

    // j-th smallest stored value, 1-based.
    std::uint64_t select(std::uint64_t j, QueryStats* st) const {
        if (j == 0 || j > len_) throw RangeError("embedded FID select out of range");
        std::uint64_t* visits = st ? &st->inner_tree_visits : nullptr;
        std::uint64_t top = tree_prefix(*tables_, cv_, j, visits);
        return (top << shift_) | low(j);
    }

    std::vector<std::uint64_t> decode() const {
        std::vector<std::uint64_t> diffs = tables_->decode(cv_);
        std::vector<std::uint64_t> out(len_);
        std::uint64_t acc = 0;
        for (std::uint64_t i = 0; i < len_; ++i) {
            acc += diffs[i];
            out[i] = (acc << shift_) | low(i + 1);
        }
        return out;
    }

private:
    std::uint64_t low(std::uint64_t i) const { return buf_->read_unchecked(low_off_ + (i - 1) * shift_, shift_); }

    const BitBuffer* buf_;
    const CountTables* tables_;
    std::uint64_t len_;
    unsigned shift_;
    std::uint64_t top_ = 0;
    CodeView cv_;
    std::size_t low_off_ = 0;
};

// Maximal intervals of a difference sequence, as 1-based [first, last] pairs.
inline std::vector<std::pair<std::uint64_t, std::uint64_t>> interval_partition(std::span<const std::uint64_t> deltas) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    for (std::uint64_t i = 1; i <= deltas.size(); ++i) {
        if (out.empty() || deltas[i - 1] != 0) {
            out.emplace_back(i, i);
        } else {
            out.back().second = i;
        }
    }
    return out;
}

// Builds the b·m-bit unified region for one block and appends it to `out`.
inline void build_unified_low(BitBuffer& out, std::span<const std::uint64_t> deltas,
                              std::span<const std::uint64_t> lows, const LowGeometry& g,
                              const CountTables* tables) {
    if (deltas.size() != lows.size()) throw BuildError("unified low part: length mismatch");
    std::size_t start = out.size();
    for (auto [first, last] : interval_partition(deltas)) {
        std::uint64_t len = last - first + 1;
        auto vals = lows.subspan(first - 1, len);
        for (std::uint64_t i = 1; i < len; ++i) {
            if (vals[i] <= vals[i - 1]) throw BuildError("unified low part: interval not strictly increasing");
        }
        if (len <= g.l_thresh) {
            for (std::uint64_t v : vals) out.write_bits(v, g.b);
        } else {
            if (tables == nullptr) throw BuildError("unified low part: embedded FID tables missing");
            write_inner_fid(out, *tables, g, vals);
        }
    }
    if (out.size() - start != g.b * lows.size()) throw BuildError("unified low part: footprint mismatch");
}

// Largest i in [first, last] with low_i <= v, or first − 1.
inline std::uint64_t unified_rank(const BitBuffer& region, std::size_t block_off, std::uint64_t first,
                                  std::uint64_t last, std::uint64_t v, const LowGeometry& g,
                                  const CountTables* tables, QueryStats* st) {
    std::uint64_t len = last - first + 1;
    std::size_t base = block_off + (first - 1) * g.b;
    if (len > g.l_thresh) {
        InnerFid inner(region, base, len, *tables, g);
        return first - 1 + inner.rank(v, st);
    }
    std::uint64_t lo = first, up = last, ans = first - 1;
    while (lo <= up) {
        std::uint64_t mid = lo + (up - lo) / 2;
        if (st) ++st->low_comparisons;
        if (region.read_unchecked(block_off + (mid - 1) * g.b, g.b) <= v) {
            ans = mid;
            lo = mid + 1;
        } else {
            up = mid - 1;
        }
    }
    return ans;
}

// Low value of the j-th element (1-based) of interval [first, last].
inline std::uint64_t unified_select(const BitBuffer& region, std::size_t block_off, std::uint64_t first,
                                    std::uint64_t last, std::uint64_t j, const LowGeometry& g,
                                    const CountTables* tables, QueryStats* st) {
    std::uint64_t len = last - first + 1;
    if (j == 0 || j > len) throw RangeError("unified_select: offset outside interval");
    std::size_t base = block_off + (first - 1) * g.b;
    if (len > g.l_thresh) {
        InnerFid inner(region, base, len, *tables, g);
        return inner.select(j, st);
    }
    return region.read_unchecked(base + (j - 1) * g.b, g.b);
}

}  // namespace sfid
