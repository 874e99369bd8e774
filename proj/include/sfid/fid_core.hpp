#pragma once
// Block-decomposed FID shared by the basic and advanced variants.
//
// Keys x_1 < … < x_n are cut into blocks of B^t consecutive keys (the last
// block may be shorter). Inside block k with base x_s (x_0 = 0) each key is
// split relative to ⌊x_s / 2^b⌋·2^b into a b-bit low part and a mid-high part;
// consecutive mid-high differences δ_i are split again into δ^mid (low 2h
// bits) and δ^high (the rest).
//
// Payload sections, in order:
//   inter  endpoint predecessor map (keys x_{kB^t}, values k), body only
//   meta   per block: Δ, φ (mid root label), |I|, each w bits
//   high   per block with |I| > 0: idx map (i → δ^high_{≤i}), sum map (δ_{≤i} → i)
//   mid    per block: aB-tree code, ⌈log2 N(m, φ)⌉ bits
//   low    per block: b·m bits (plain array, or unified region for advanced)

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sfid/abtree.hpp"
#include "sfid/bitio.hpp"
#include "sfid/errors.hpp"
#include "sfid/params.hpp"
#include "sfid/predecessor.hpp"
#include "sfid/stats.hpp"
#include "sfid/unified_low.hpp"

namespace sfid {

enum class FidKind : std::uint8_t { basic = 1, advanced = 2, select_dict = 3, partial_sum = 4 };

inline const char* kind_name(FidKind k) {
    switch (k) {
        case FidKind::basic: return "fid-basic";
        case FidKind::advanced: return "fid-advanced";
        case FidKind::select_dict: return "select-dict";
        case FidKind::partial_sum: return "partial-sum";
    }
    return "unknown";
}

struct Section {
    std::string name;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
};

inline std::uint64_t low_mask(unsigned bits) {
    return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

struct KeySplit {
    std::uint64_t low = 0;
    std::uint64_t mid_high = 0;  // relative to the block base
};

inline KeySplit split_key(std::uint64_t x, const FidParams& p, std::uint64_t base = 0) {
    return {x & low_mask(p.b), (x >> p.b) - (base >> p.b)};
}

struct SplitBlock {
    std::uint64_t base = 0;  // x_s
    std::vector<std::uint64_t> delta, mid, high, low;
    std::uint64_t total = 0;  // Δ
};

inline SplitBlock split_block(std::span<const std::uint64_t> keys, std::uint64_t base, const FidParams& p) {
    SplitBlock s;
    s.base = base;
    std::uint64_t prev = 0;
    unsigned two_h = 2 * p.h;
    for (std::uint64_t x : keys) {
        KeySplit k = split_key(x, p, base);
        std::uint64_t d = k.mid_high - prev;
        prev = k.mid_high;
        s.delta.push_back(d);
        s.mid.push_back(d & low_mask(two_h));
        s.high.push_back(d >> two_h);
        s.low.push_back(k.low);
    }
    s.total = prev;
    return s;
}

// Indices i (1-based) with δ_{≤i} = v, as [first, last]; nullopt when no
// prefix sum equals v.
inline std::optional<std::pair<std::uint64_t, std::uint64_t>> maximal_interval(
    std::span<const std::uint64_t> deltas, std::uint64_t v) {
    std::optional<std::pair<std::uint64_t, std::uint64_t>> out;
    std::uint64_t acc = 0;
    for (std::uint64_t i = 1; i <= deltas.size(); ++i) {
        acc += deltas[i - 1];
        if (acc == v) {
            if (!out) out.emplace(i, i);
            out->second = i;
        } else if (acc > v) {
            break;
        }
    }
    return out;
}

inline std::shared_ptr<const CountTables> mid_tables_for(const FidParams& p) {
    std::uint64_t sigma = p.mid_alphabet();
    std::uint64_t phi = p.block_size() * (sigma - 1) + 1;
    return shared_sum_tables(p.branching, p.t, sigma, phi);
}

inline void validate_keys(std::span<const std::uint64_t> keys, std::uint64_t universe) {
    if (keys.empty()) throw BuildError("at least one key required");
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i] >= universe) {
            throw BuildError("key " + std::to_string(keys[i]) + " outside universe " + std::to_string(universe));
        }
        if (i > 0 && keys[i] <= keys[i - 1]) {
            throw BuildError("keys must be strictly increasing (index " + std::to_string(i) + ")");
        }
    }
}

struct BlockInfo {
    std::uint64_t m = 0;
    std::uint64_t delta = 0;  // Δ
    std::uint64_t phi = 0;    // mid root label
    std::uint64_t high_count = 0;
    std::size_t mid_off = 0;
    std::size_t mid_len = 0;
    std::size_t low_off = 0;
    std::int64_t high_slot = -1;
};

class FidCore {
public:
    FidCore() = default;

    static FidCore build(std::span<const std::uint64_t> keys, const FidParams& p, FidKind kind) {
        if (kind != FidKind::basic && kind != FidKind::advanced) throw ParameterError("FidCore: unsupported kind");
        if (keys.size() != p.n) throw BuildError("key count does not match parameters");
        validate_keys(keys, p.universe);
        auto mid = mid_tables_for(p);
        std::shared_ptr<const CountTables> inner;
        if (kind == FidKind::advanced && p.block_size() > p.l_thresh) inner = inner_tables(p.t_inner);

        std::uint64_t bs = p.block_size(), nb = p.blocks();
        BitBuffer inter, meta, high, midb, low;

        std::vector<std::uint64_t> ends(nb), ids(nb);
        for (std::uint64_t k = 1; k <= nb; ++k) {
            ends[k - 1] = keys[std::min(k * bs, p.n) - 1];
            ids[k - 1] = k;
        }
        AssocKeyMap::build(ends, ids, p.universe, nb + 1).serialize_body(inter);

        LowGeometry geo{p.b, p.l_thresh, p.t_inner};
        for (std::uint64_t k = 1; k <= nb; ++k) {
            std::uint64_t s = (k - 1) * bs;
            std::uint64_t m = std::min(bs, p.n - s);
            std::uint64_t base = k == 1 ? 0 : keys[s - 1];
            SplitBlock sb = split_block(keys.subspan(s, m), base, p);
            EncodedABTree enc = mid->encode(sb.mid);
            std::vector<std::uint64_t> idx_keys, idx_vals, sum_keys, sum_vals;
            std::uint64_t hp = 0, dp = 0;
            for (std::uint64_t i = 1; i <= m; ++i) {
                hp += sb.high[i - 1];
                dp += sb.delta[i - 1];
                if (sb.high[i - 1] != 0) {
                    idx_keys.push_back(i);
                    idx_vals.push_back(hp);
                    sum_keys.push_back(dp);
                    sum_vals.push_back(i);
                }
            }
            meta.write_bits(sb.total, p.w);
            meta.write_bits(enc.root_label, p.w);
            meta.write_bits(idx_keys.size(), p.w);
            if (!idx_keys.empty()) {
                AssocKeyMap::build(idx_keys, idx_vals, m + 1, (sb.total >> (2 * p.h)) + 1).serialize_body(high);
                AssocKeyMap::build(sum_keys, sum_vals, sb.total + 1, m + 1).serialize_body(high);
            }
            midb.append(enc.code);
            if (kind == FidKind::advanced) {
                build_unified_low(low, sb.delta, sb.low, geo, inner.get());
            } else {
                for (std::uint64_t v : sb.low) low.write_bits(v, p.b);
            }
        }
        BitBuffer payload;
        std::vector<Section> sections;
        for (auto [name, part] : {std::pair<const char*, BitBuffer*>{"inter", &inter}, {"meta", &meta},
                                  {"high", &high}, {"mid", &midb}, {"low", &low}}) {
            sections.push_back({name, payload.size(), part->size()});
            payload.append(*part);
        }
        return load(p, kind, std::move(payload), std::move(sections));
    }

    // Rebuilds the query structure from a payload written by build().
    static FidCore load(const FidParams& p, FidKind kind, BitBuffer payload, std::vector<Section> sections = {}) {
        FidCore f;
        f.p_ = p;
        f.kind_ = kind;
        f.mid_ = mid_tables_for(p);
        if (kind == FidKind::advanced && p.block_size() > p.l_thresh) f.inner_ = inner_tables(p.t_inner);
        f.payload_ = std::move(payload);
        std::uint64_t bs = p.block_size(), nb = p.blocks();
        try {
            BitReader r(f.payload_);
            std::vector<Section> found;
            auto mark = [&](const char* name, std::size_t start) { found.push_back({name, start, r.position() - start}); };

            std::size_t start = r.position();
            f.endpoints_ = AssocKeyMap::deserialize_body(r, nb, p.universe, nb + 1, PredMode::sparse, 1);
            mark("inter", start);

            start = r.position();
            f.blocks_.resize(nb);
            for (std::uint64_t k = 1; k <= nb; ++k) {
                BlockInfo& bi = f.blocks_[k - 1];
                bi.m = std::min(bs, p.n - (k - 1) * bs);
                bi.delta = r.read(p.w);
                bi.phi = r.read(p.w);
                bi.high_count = r.read(p.w);
                if (bi.phi > bi.delta || bi.high_count > bi.m) throw CorruptionError("block meta out of range");
            }
            mark("meta", start);

            start = r.position();
            for (BlockInfo& bi : f.blocks_) {
                if (bi.high_count == 0) continue;
                bi.high_slot = static_cast<std::int64_t>(f.idx_pred_.size());
                f.idx_pred_.push_back(AssocKeyMap::deserialize_body(r, bi.high_count, bi.m + 1,
                                                                    (bi.delta >> (2 * p.h)) + 1, PredMode::sparse, 1));
                f.sum_pred_.push_back(
                    AssocKeyMap::deserialize_body(r, bi.high_count, bi.delta + 1, bi.m + 1, PredMode::sparse, 1));
            }
            mark("high", start);

            start = r.position();
            for (BlockInfo& bi : f.blocks_) {
                if (f.mid_->count(bi.m, static_cast<Label>(bi.phi)) == 0) {
                    throw CorruptionError("mid root label has no instances");
                }
                bi.mid_off = r.position();
                bi.mid_len = f.mid_->code_bits(bi.m, static_cast<Label>(bi.phi));
                r.skip(bi.mid_len);
            }
            mark("mid", start);

            start = r.position();
            for (BlockInfo& bi : f.blocks_) {
                bi.low_off = r.position();
                r.skip(bi.m * p.b);
            }
            mark("low", start);
            if (r.remaining() != 0) throw CorruptionError("trailing bits after low section");
            if (!sections.empty()) {
                if (sections.size() != found.size()) throw CorruptionError("section table mismatch");
                for (std::size_t i = 0; i < found.size(); ++i) {
                    if (sections[i].name != found[i].name || sections[i].offset != found[i].offset ||
                        sections[i].length != found[i].length) {
                        throw CorruptionError("section table disagrees with payload layout");
                    }
                }
            }
            f.sections_ = std::move(found);
        } catch (const RangeError& e) {
            throw CorruptionError(std::string("truncated payload: ") + e.what());
        }
        return f;
    }

    const FidParams& params() const noexcept { return p_; }
    FidKind kind() const noexcept { return kind_; }
    const BitBuffer& payload() const noexcept { return payload_; }
    const std::vector<Section>& sections() const noexcept { return sections_; }
    const std::vector<BlockInfo>& blocks() const noexcept { return blocks_; }
    const CountTables& mid_tables() const { return *mid_; }
    const CountTables* inner_tables_ptr() const { return inner_.get(); }
    const AssocKeyMap& endpoints() const { return endpoints_; }

    std::uint64_t table_bits() const { return mid_->table_bits() + (inner_ ? inner_->table_bits() : 0); }

    CodeView mid_view(std::uint64_t k) const {
        const BlockInfo& bi = blocks_.at(k - 1);
        return {&payload_, bi.mid_off, bi.mid_len, bi.m, static_cast<Label>(bi.phi)};
    }

    // Previous block's endpoint x_s (0 for the first block).
    std::uint64_t block_base(std::uint64_t k, QueryStats* st = nullptr) const {
        if (k == 1) return 0;
        if (st) ++st->pred_probes;
        return endpoints_.key_at(k - 2);
    }

    // Number of keys <= x.
    std::uint64_t rank(std::uint64_t x, QueryStats* st = nullptr) const {
        if (x >= p_.universe) throw RangeError("rank: x outside universe");
        std::uint64_t nb = blocks_.size(), bs = p_.block_size();
        std::uint64_t k = 1;
        if (auto e = endpoints_.pred(x, st)) {
            if (e->key == x) return std::min(e->value * bs, p_.n);
            k = e->value + 1;
            if (k > nb) return p_.n;
        }
        std::uint64_t base = block_base(k, st);
        std::uint64_t rel = x - ((base >> p_.b) << p_.b);
        return (k - 1) * bs + block_rank(k, rel, st);
    }

    // i-th smallest key, 1-based.
    std::uint64_t select(std::uint64_t i, QueryStats* st = nullptr) const {
        if (i == 0 || i > p_.n) throw RangeError("select: index outside [1, n]");
        std::uint64_t bs = p_.block_size();
        std::uint64_t k = (i - 1) / bs + 1;
        std::uint64_t base = block_base(k, st);
        return ((base >> p_.b) << p_.b) + block_partialsum(k, i - (k - 1) * bs, st);
    }

    // Largest key <= x.
    std::optional<std::uint64_t> predecessor(std::uint64_t x, QueryStats* st = nullptr) const {
        std::uint64_t r = rank(x, st);
        if (r == 0) return std::nullopt;
        return select(r, st);
    }

    // δ_{≤i}·2^b + x^low_i within block k.
    std::uint64_t block_partialsum(std::uint64_t k, std::uint64_t i, QueryStats* st = nullptr) const {
        const BlockInfo& bi = blocks_.at(k - 1);
        if (i == 0 || i > bi.m) throw RangeError("block_partialsum: index outside block");
        std::uint64_t hp = 0;
        std::uint64_t i1 = 0, i2 = bi.m + 1;
        if (bi.high_slot >= 0) {
            const AssocKeyMap& ip = idx_pred_[bi.high_slot];
            if (auto h = ip.pred(i, st)) {
                hp = h->value;
                i1 = h->key;
            }
            if (needs_interval(bi)) {
                if (auto s = ip.succ(i, st)) i2 = s->key;
            }
        }
        CodeView cv = mid_view(k);
        std::uint64_t* visits = st ? &st->tree_visits : nullptr;
        std::uint64_t mp = tree_prefix(*mid_, cv, i, visits);
        std::uint64_t lo;
        if (!needs_interval(bi)) {
            lo = payload_.read_unchecked(bi.low_off + (i - 1) * p_.b, p_.b);
        } else {
            std::uint64_t last = std::min(tree_rank(*mid_, cv, mp, visits).first, i2 - 1);
            std::uint64_t first = mp == 0 ? 0 : tree_rank(*mid_, cv, mp - 1, visits).first + 1;
            first = std::max({first, i1, std::uint64_t{1}});
            lo = unified_select(payload_, bi.low_off, first, last, i - first + 1, geometry(), inner_.get(), st);
        }
        return (((hp << (2 * p_.h)) + mp) << p_.b) | lo;
    }

    // Largest i in [0, m] with δ_{≤i}·2^b + x^low_i <= rel.
    std::uint64_t block_rank(std::uint64_t k, std::uint64_t rel, QueryStats* st = nullptr) const {
        const BlockInfo& bi = blocks_.at(k - 1);
        std::uint64_t v = rel >> p_.b;
        std::uint64_t vlow = rel & low_mask(p_.b);
        auto iv = locate(k, v, st);
        if (iv.first > iv.second) return iv.second;
        if (kind_ == FidKind::advanced) {
            return unified_rank(payload_, bi.low_off, iv.first, iv.second, vlow, geometry(), inner_.get(), st);
        }
        return plain_rank(bi.low_off, iv.first, iv.second, vlow, st);
    }

    // Maximal interval of prefix value v within block k.
    std::optional<std::pair<std::uint64_t, std::uint64_t>> block_interval(std::uint64_t k, std::uint64_t v,
                                                                          QueryStats* st = nullptr) const {
        auto iv = locate(k, v, st);
        if (iv.first > iv.second) return std::nullopt;
        return iv;
    }

private:
    LowGeometry geometry() const { return {p_.b, p_.l_thresh, p_.t_inner}; }

    bool needs_interval(const BlockInfo& bi) const { return kind_ == FidKind::advanced && bi.m > p_.l_thresh; }

    // Returns [first, last] where last is the largest i with δ_{≤i} <= v and
    // first the smallest i >= 1 with δ_{≤i} >= v; first > last means no
    // prefix equals v and last is the rank answer.
    std::pair<std::uint64_t, std::uint64_t> locate(std::uint64_t k, std::uint64_t v, QueryStats* st) const {
        const BlockInfo& bi = blocks_.at(k - 1);
        std::uint64_t i1 = 0, vhigh = 0, i2 = bi.m + 1;
        if (bi.high_slot >= 0) {
            const AssocKeyMap& sp = sum_pred_[bi.high_slot];
            if (auto h = sp.pred(v, st)) {
                i1 = h->value;
                auto hv = idx_pred_[bi.high_slot].pred(i1, st);
                vhigh = hv->value;
            }
            if (auto s = sp.succ(v, st)) i2 = s->value;
        }
        std::uint64_t thr = v - (vhigh << (2 * p_.h));
        CodeView cv = mid_view(k);
        std::uint64_t* visits = st ? &st->tree_visits : nullptr;
        auto [hi, pre] = tree_rank(*mid_, cv, thr, visits);
        std::uint64_t last = std::min(hi, i2 - 1);
        if (last == hi && pre < thr) return {last + 1, last};
        std::uint64_t first = thr == 0 ? 0 : tree_rank(*mid_, cv, thr - 1, visits).first + 1;
        first = std::max({first, i1, std::uint64_t{1}});
        return {first, last};
    }

    std::uint64_t plain_rank(std::size_t off, std::uint64_t first, std::uint64_t last, std::uint64_t v,
                             QueryStats* st) const {
        std::uint64_t lo = first, up = last, ans = first - 1;
        while (lo <= up) {
            std::uint64_t mid = lo + (up - lo) / 2;
            if (st) ++st->low_comparisons;
            if (payload_.read_unchecked(off + (mid - 1) * p_.b, p_.b) <= v) {
                ans = mid;
                lo = mid + 1;
            } else {
                up = mid - 1;
            }
        }
        return ans;
    }

    FidParams p_;
    FidKind kind_ = FidKind::basic;
    std::shared_ptr<const CountTables> mid_;
    std::shared_ptr<const CountTables> inner_;
    BitBuffer payload_;
    std::vector<Section> sections_;
    AssocKeyMap endpoints_;
    std::vector<BlockInfo> blocks_;
    std::vector<AssocKeyMap> idx_pred_, sum_pred_;
};

}  // namespace sfid
