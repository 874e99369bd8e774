#pragma once
// Predecessor / successor search with associated values.
//
// Sparse mode: keys are grouped into buckets of S = ⌈log2 max(U/n, 4)⌉
// consecutive keys. The first key of every bucket (its representative) is
// indexed by a prefix table over the top ℓ0 = ⌊log2 #buckets⌋ key bits and by
// one exact-lookup table per prefix length ℓ ∈ [ℓ0, log U]. A query binary
// searches the prefix lengths for the longest stored prefix of x, picks the
// neighbouring representative, and binary searches inside its bucket.
//
// Dense mode (U ≤ n·β^t, β = max(8, ⌈log2 n⌉)): the key space is cut into
// cells of 2^{d·t} keys (d = ⌈log2 β⌉) with a direct cell-start array; inside
// a cell keys live in a 2^d-ary trie of depth t whose nodes carry a child
// bitmap. A query binary searches the t + 1 trie levels.
//
// Every structure is stored in exactly the bits reported by size_bits(); the
// exact-lookup tables are serialized as explicit entry lists.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sfid/bitio.hpp"
#include "sfid/errors.hpp"
#include "sfid/stats.hpp"

namespace sfid {

enum class PredMode : std::uint8_t { sparse = 0, dense = 1 };

struct PredHit {
    std::size_t index;
    std::uint64_t key;
    std::uint64_t value;
};

class AssocKeyMap {
public:
    AssocKeyMap() = default;

    static AssocKeyMap build(std::span<const std::uint64_t> keys,
                             std::span<const std::uint64_t> values, std::uint64_t universe,
                             std::uint64_t value_universe, PredMode mode = PredMode::sparse,
                             unsigned dense_t = 1) {
        if (keys.empty()) throw BuildError("AssocKeyMap: at least one key required");
        if (keys.size() != values.size()) throw BuildError("AssocKeyMap: keys/values size mismatch");
        if (universe == 0 || value_universe == 0) throw BuildError("AssocKeyMap: empty universe");
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (keys[i] >= universe) {
                throw BuildError("AssocKeyMap: key " + std::to_string(keys[i]) +
                                 " outside universe " + std::to_string(universe));
            }
            if (i > 0 && keys[i] <= keys[i - 1]) {
                throw BuildError("AssocKeyMap: keys must be strictly increasing (index " +
                                 std::to_string(i) + ")");
            }
            if (values[i] >= value_universe) {
                throw BuildError("AssocKeyMap: value " + std::to_string(values[i]) +
                                 " outside value universe " + std::to_string(value_universe));
            }
        }
        AssocKeyMap m;
        m.universe_ = universe;
        m.value_universe_ = value_universe;
        m.mode_ = mode;
        m.dense_t_ = dense_t;
        m.keys_.assign(keys.begin(), keys.end());
        m.values_.assign(values.begin(), values.end());
        if (mode == PredMode::sparse) {
            m.init_sparse_geometry();
            m.build_sparse();
        } else {
            if (dense_t == 0) throw ModeError("dense mode requires t >= 1");
            m.init_dense_geometry();
            m.build_dense();
        }
        return m;
    }

    std::size_t size() const noexcept { return keys_.size(); }
    std::uint64_t universe() const noexcept { return universe_; }
    std::uint64_t value_universe() const noexcept { return value_universe_; }
    PredMode mode() const noexcept { return mode_; }
    unsigned dense_t() const noexcept { return dense_t_; }
    std::uint64_t key_at(std::size_t i) const { return keys_.at(i); }
    std::uint64_t value_at(std::size_t i) const { return values_.at(i); }

    // Largest stored key <= x.
    std::optional<PredHit> pred(std::uint64_t x, QueryStats* st = nullptr) const {
        QueryStats local;
        std::optional<std::size_t> idx = locate(x, &local);
        if (idx) probe(&local);
        account(st, local);
        if (!idx) return std::nullopt;
        return PredHit{*idx, keys_[*idx], values_[*idx]};
    }

    // Smallest stored key > x.
    std::optional<PredHit> succ(std::uint64_t x, QueryStats* st = nullptr) const {
        QueryStats local;
        std::optional<std::size_t> idx = locate(x, &local);
        std::size_t next = idx ? *idx + 1 : 0;
        if (next < keys_.size()) probe(&local, 2);
        account(st, local);
        if (next >= keys_.size()) return std::nullopt;
        return PredHit{next, keys_[next], values_[next]};
    }

    // --- serialization -----------------------------------------------------

    // Header fields (count − 1, universe − 1, value universe − 1) are written
    // with `field_width` bits; the caller must pass the same width to load.
    void serialize(BitBuffer& out, unsigned field_width) const {
        auto field = [&](std::uint64_t v, const char* what) {
            if (width_for(v) > field_width) {
                throw DomainError(std::string("AssocKeyMap: ") + what + " does not fit header width");
            }
            out.write_bits(v, field_width);
        };
        field(keys_.size() - 1, "count");
        field(universe_ - 1, "universe");
        field(value_universe_ - 1, "value universe");
        out.write_bits(static_cast<std::uint64_t>(mode_), 1);
        out.write_bits(dense_t_, 6);
        serialize_body(out);
    }

    static AssocKeyMap deserialize(BitReader& in, unsigned field_width) {
        std::size_t n = in.read(field_width) + 1;
        std::uint64_t universe = in.read(field_width) + 1;
        std::uint64_t value_universe = in.read(field_width) + 1;
        auto mode = static_cast<PredMode>(in.read(1));
        auto dense_t = static_cast<unsigned>(in.read(6));
        return deserialize_body(in, n, universe, value_universe, mode, dense_t);
    }

    // Body only: for maps whose count and universes the caller already knows.
    void serialize_body(BitBuffer& out) const {
        unsigned kw = key_width(), vw = value_width();
        for (auto k : keys_) out.write_bits(k, kw);
        for (auto v : values_) out.write_bits(v, vw);
        if (mode_ == PredMode::sparse) {
            serialize_sparse(out);
        } else {
            serialize_dense(out);
        }
    }

    static AssocKeyMap deserialize_body(BitReader& in, std::size_t n, std::uint64_t universe,
                                        std::uint64_t value_universe, PredMode mode, unsigned dense_t) {
        if (n == 0 || universe == 0 || value_universe == 0) {
            throw CorruptionError("AssocKeyMap: empty map in stored form");
        }
        AssocKeyMap m;
        m.universe_ = universe;
        m.value_universe_ = value_universe;
        m.mode_ = mode;
        m.dense_t_ = dense_t;
        unsigned kw = m.key_width(), vw = m.value_width();
        m.keys_.resize(n);
        m.values_.resize(n);
        for (auto& k : m.keys_) k = in.read(kw);
        for (auto& v : m.values_) v = in.read(vw);
        for (std::size_t i = 0; i < n; ++i) {
            if (m.keys_[i] >= m.universe_ || (i > 0 && m.keys_[i] <= m.keys_[i - 1])) {
                throw CorruptionError("AssocKeyMap: stored keys not strictly increasing in universe");
            }
            if (m.values_[i] >= m.value_universe_) {
                throw CorruptionError("AssocKeyMap: stored value outside value universe");
            }
        }
        if (m.mode_ == PredMode::sparse) {
            m.init_sparse_geometry();
            m.deserialize_sparse(in);
        } else {
            if (dense_t == 0) throw CorruptionError("AssocKeyMap: dense map with t = 0");
            try {
                m.init_dense_geometry();
            } catch (const ModeError& e) {
                throw CorruptionError(e.what());
            }
            m.deserialize_dense(in);
        }
        return m;
    }

    std::size_t body_bits() const {
        BitBuffer b;
        serialize_body(b);
        return b.size();
    }

    std::size_t size_bits(unsigned field_width) const {
        BitBuffer b;
        serialize(b, field_width);
        return b.size();
    }

    // Deterministic probe ceilings for one pred/succ query.
    std::uint64_t worst_case_probes() const {
        if (mode_ == PredMode::sparse) {
            // top + representative + level search + node fetch + bucket search + result
            return 2 + ceil_log2(levels_) + 1 + ceil_log2(bucket_size_) + 2;
        }
        return 2 + ceil_log2(dense_t_ + 1) + 1 + 1 + 2;
    }

    friend bool operator==(const AssocKeyMap& a, const AssocKeyMap& b) {
        return a.universe_ == b.universe_ && a.value_universe_ == b.value_universe_ &&
               a.mode_ == b.mode_ && a.dense_t_ == b.dense_t_ && a.keys_ == b.keys_ &&
               a.values_ == b.values_;
    }

private:
    struct Node {
        std::uint64_t bitmap = 0;
        std::uint32_t min = 0;
        std::uint32_t max = 0;
    };
    using Level = std::unordered_map<std::uint64_t, Node>;

    static void probe(QueryStats* st, std::uint64_t k = 1) {
        if (st) st->pred_probes += k;
    }

    static void account(QueryStats* st, const QueryStats& local) {
        if (!st) return;
        st->pred_probes += local.pred_probes;
        st->pred_peak = std::max(st->pred_peak, local.pred_probes);
    }

    std::optional<std::size_t> locate(std::uint64_t x, QueryStats* st) const {
        return mode_ == PredMode::sparse ? pred_sparse(x, st) : pred_dense(x, st);
    }

    unsigned key_width() const { return width_for(universe_ - 1); }
    unsigned value_width() const { return width_for(value_universe_ - 1); }
    unsigned index_width() const { return width_for(keys_.size() - 1); }

    // ---------------- sparse -----------------------------------------------

    void init_sparse_geometry() {
        std::uint64_t n = keys_.size();
        lg_ = key_width();
        std::uint64_t ratio = std::max<std::uint64_t>((universe_ + n - 1) / n, 4);
        bucket_size_ = std::max<std::uint64_t>(1, ceil_log2(ratio));
        buckets_ = (n + bucket_size_ - 1) / bucket_size_;
        l0_ = std::min<unsigned>(static_cast<unsigned>(std::bit_width(buckets_)) - 1, lg_);
        levels_ = buckets_ == 1 ? 0 : lg_ - l0_ + 1;
    }

    std::uint64_t prefix(std::uint64_t x, unsigned len) const {
        return len == 0 ? 0 : x >> (lg_ - len);
    }

    std::uint64_t rep(std::uint64_t r) const { return keys_[r * bucket_size_]; }

    void build_sparse() {
        if (levels_ == 0) return;
        top_.assign(std::size_t{1} << l0_, 0);
        for (std::uint64_t r = 0; r < buckets_; ++r) {
            top_[prefix(rep(r), l0_)] = r + 1;
        }
        for (std::size_t p = 1; p < top_.size(); ++p) {
            if (top_[p] == 0) top_[p] = top_[p - 1];
        }
        levels_map_.assign(levels_, Level{});
        for (unsigned l = l0_; l <= lg_; ++l) {
            Level& lev = levels_map_[l - l0_];
            for (std::uint64_t r = 0; r < buckets_; ++r) {
                auto [it, fresh] = lev.try_emplace(prefix(rep(r), l), Node{0, std::uint32_t(r), std::uint32_t(r)});
                if (!fresh) it->second.max = static_cast<std::uint32_t>(r);
            }
        }
    }

    std::optional<std::size_t> pred_sparse(std::uint64_t x, QueryStats* st) const {
        if (x >= universe_) x = universe_ - 1;
        std::uint64_t r = 0;
        probe(st);
        if (levels_ == 0) {
            if (keys_[0] > x) return std::nullopt;
        } else {
            std::uint64_t p = prefix(x, l0_);
            std::uint64_t q = top_[p];
            if (q == 0) return std::nullopt;
            r = q - 1;
            probe(st);
        }
        if (levels_ != 0 && prefix(rep(r), l0_) == prefix(x, l0_)) {
            std::uint64_t p = prefix(x, l0_);
            unsigned lo = l0_, hi = lg_;
            const Node* cur = nullptr;
            while (lo < hi) {
                unsigned mid = (lo + hi + 1) / 2;
                probe(st);
                const Level& lev = levels_map_[mid - l0_];
                auto it = lev.find(prefix(x, mid));
                if (it != lev.end()) {
                    lo = mid;
                    cur = &it->second;
                } else {
                    hi = mid - 1;
                }
            }
            if (cur == nullptr) {
                probe(st);
                cur = &levels_map_[0].at(p);
            }
            if (lo == lg_) {
                r = cur->min;
            } else if ((x >> (lg_ - lo - 1)) & 1) {
                r = cur->max;
            } else {
                if (cur->min == 0) return std::nullopt;
                r = cur->min - 1;
            }
        }
        std::size_t lo = r * bucket_size_;
        std::size_t hi = std::min<std::size_t>(keys_.size(), lo + bucket_size_) - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi + 1) / 2;
            probe(st);
            if (keys_[mid] <= x) lo = mid; else hi = mid - 1;
        }
        return lo;
    }

    void serialize_sparse(BitBuffer& out) const {
        if (levels_ == 0) return;
        unsigned bw = width_for(buckets_);
        unsigned rw = width_for(buckets_ - 1);
        for (auto v : top_) out.write_bits(v, bw);
        for (unsigned l = l0_; l <= lg_; ++l) {
            const Level& lev = levels_map_[l - l0_];
            out.write_bits(lev.size(), bw);
            std::vector<std::pair<std::uint64_t, Node>> entries(lev.begin(), lev.end());
            std::sort(entries.begin(), entries.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [key, node] : entries) {
                out.write_bits(key, l);
                out.write_bits(node.min, rw);
                if (l != lg_) out.write_bits(node.max, rw);
            }
        }
    }

    void deserialize_sparse(BitReader& in) {
        if (levels_ == 0) return;
        unsigned bw = width_for(buckets_);
        unsigned rw = width_for(buckets_ - 1);
        top_.resize(std::size_t{1} << l0_);
        for (auto& v : top_) v = in.read(bw);
        levels_map_.assign(levels_, Level{});
        for (unsigned l = l0_; l <= lg_; ++l) {
            Level& lev = levels_map_[l - l0_];
            std::uint64_t count = in.read(bw);
            for (std::uint64_t e = 0; e < count; ++e) {
                std::uint64_t key = in.read(l);
                Node node;
                node.min = static_cast<std::uint32_t>(in.read(rw));
                node.max = l != lg_ ? static_cast<std::uint32_t>(in.read(rw)) : node.min;
                lev.emplace(key, node);
            }
        }
    }

    // ---------------- dense ------------------------------------------------

    void init_dense_geometry() {
        std::uint64_t n = keys_.size();
        std::uint64_t beta = std::max<std::uint64_t>(8, ceil_log2(n));
        // U ≤ n·β^t, evaluated without overflow.
        long double cap = static_cast<long double>(n);
        for (unsigned i = 0; i < dense_t_; ++i) cap *= static_cast<long double>(beta);
        if (static_cast<long double>(universe_) > cap) {
            throw ModeError("dense predecessor requires U <= n*beta^t (U=" + std::to_string(universe_) +
                            ", n=" + std::to_string(n) + ", beta=" + std::to_string(beta) +
                            ", t=" + std::to_string(dense_t_) + ")");
        }
        digit_ = ceil_log2(beta);
        unsigned shift = digit_ * dense_t_;
        cells_ = shift >= 64 ? 1 : ((universe_ - 1) >> shift) + 1;
    }

    std::uint64_t dense_prefix(std::uint64_t x, unsigned level) const {
        unsigned shift = digit_ * (dense_t_ - level);
        return shift >= 64 ? 0 : x >> shift;
    }

    void build_dense() {
        std::size_t n = keys_.size();
        cell_start_.assign(cells_ + 1, n);
        for (std::size_t i = n; i-- > 0;) cell_start_[dense_prefix(keys_[i], 0)] = i;
        for (std::size_t c = cells_; c-- > 0;) {
            cell_start_[c] = std::min(cell_start_[c], cell_start_[c + 1]);
        }
        levels_map_.assign(dense_t_ + 1, Level{});
        std::uint64_t mask = (std::uint64_t{1} << digit_) - 1;
        for (unsigned l = 0; l <= dense_t_; ++l) {
            Level& lev = levels_map_[l];
            for (std::size_t i = 0; i < n; ++i) {
                auto [it, fresh] = lev.try_emplace(dense_prefix(keys_[i], l),
                                                   Node{0, std::uint32_t(i), std::uint32_t(i)});
                if (!fresh) it->second.max = static_cast<std::uint32_t>(i);
                if (l < dense_t_) {
                    it->second.bitmap |= std::uint64_t{1} << (dense_prefix(keys_[i], l + 1) & mask);
                }
            }
        }
    }

    std::optional<std::size_t> pred_dense(std::uint64_t x, QueryStats* st) const {
        if (x >= universe_) x = universe_ - 1;
        std::uint64_t c = dense_prefix(x, 0);
        probe(st, 2);
        std::uint64_t a = cell_start_[c], e = cell_start_[c + 1];
        if (a == e) {
            if (a == 0) return std::nullopt;
            return a - 1;
        }
        unsigned lo = 0, hi = dense_t_;
        const Node* cur = nullptr;
        while (lo < hi) {
            unsigned mid = (lo + hi + 1) / 2;
            probe(st);
            const Level& lev = levels_map_[mid];
            auto it = lev.find(dense_prefix(x, mid));
            if (it != lev.end()) {
                lo = mid;
                cur = &it->second;
            } else {
                hi = mid - 1;
            }
        }
        if (cur == nullptr) {
            probe(st);
            cur = &levels_map_[0].at(c);
        }
        if (lo == dense_t_) return cur->min;
        std::uint64_t mask = (std::uint64_t{1} << digit_) - 1;
        unsigned dig = static_cast<unsigned>(dense_prefix(x, lo + 1) & mask);
        std::uint64_t below = cur->bitmap & ((std::uint64_t{1} << dig) - 1);
        if (below != 0) {
            unsigned child = 63 - static_cast<unsigned>(std::countl_zero(below));
            probe(st);
            const Node& ch = levels_map_[lo + 1].at((dense_prefix(x, lo) << digit_) | child);
            return ch.max;
        }
        if (cur->min == 0) return std::nullopt;
        return cur->min - 1;
    }

    unsigned dense_prefix_width(unsigned level) const {
        unsigned shift = digit_ * (dense_t_ - level);
        return shift >= 64 ? 0 : width_for((universe_ - 1) >> shift);
    }

    void serialize_dense(BitBuffer& out) const {
        unsigned iw = width_for(keys_.size());
        unsigned rw = index_width();
        for (auto v : cell_start_) out.write_bits(v, iw);
        for (unsigned l = 0; l <= dense_t_; ++l) {
            const Level& lev = levels_map_[l];
            out.write_bits(lev.size(), iw);
            std::vector<std::pair<std::uint64_t, Node>> entries(lev.begin(), lev.end());
            std::sort(entries.begin(), entries.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            unsigned pw = dense_prefix_width(l);
            for (const auto& [key, node] : entries) {
                out.write_bits(key, pw);
                out.write_bits(node.min, rw);
                if (l != dense_t_) {
                    out.write_bits(node.max, rw);
                    out.write_bits(node.bitmap, 1u << digit_);
                }
            }
        }
    }

    void deserialize_dense(BitReader& in) {
        unsigned iw = width_for(keys_.size());
        unsigned rw = index_width();
        cell_start_.resize(cells_ + 1);
        for (auto& v : cell_start_) v = in.read(iw);
        levels_map_.assign(dense_t_ + 1, Level{});
        for (unsigned l = 0; l <= dense_t_; ++l) {
            Level& lev = levels_map_[l];
            std::uint64_t count = in.read(iw);
            unsigned pw = dense_prefix_width(l);
            for (std::uint64_t e = 0; e < count; ++e) {
                std::uint64_t key = in.read(pw);
                Node node;
                node.min = static_cast<std::uint32_t>(in.read(rw));
                if (l != dense_t_) {
                    node.max = static_cast<std::uint32_t>(in.read(rw));
                    node.bitmap = in.read(1u << digit_);
                } else {
                    node.max = node.min;
                }
                lev.emplace(key, node);
            }
        }
    }

    std::uint64_t universe_ = 1;
    std::uint64_t value_universe_ = 1;
    PredMode mode_ = PredMode::sparse;
    unsigned dense_t_ = 1;
    std::vector<std::uint64_t> keys_;
    std::vector<std::uint64_t> values_;

    // sparse
    unsigned lg_ = 0;
    std::uint64_t bucket_size_ = 1;
    std::uint64_t buckets_ = 0;
    unsigned l0_ = 0;
    unsigned levels_ = 1;
    std::vector<std::uint64_t> top_;

    // dense
    unsigned digit_ = 3;
    std::uint64_t cells_ = 1;
    std::vector<std::uint64_t> cell_start_;

    std::vector<Level> levels_map_;
};

}  // namespace sfid
