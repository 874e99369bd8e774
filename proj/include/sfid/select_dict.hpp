#pragma once
// Select-only dictionary. Per-block high parts are replaced by one global
// dense predecessor over positions with a nonzero high difference; its value
// is the in-block high prefix at that position. The map is padded with dummy
// positions n+1, n+2, … up to ⌈n/B^t⌉ entries.
//
// Payload sections, in order:
//   global  6-bit value width, then the dense map body over positions
//           [0, n + K + 1), K = ⌈n/B^t⌉
//   bases   (x_s >> b) for blocks 2..K, w − b bits each
//   meta    mid root label per block
//   mid     aB-tree codes
//   low     b bits per key

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sfid/fid_core.hpp"

namespace sfid {

class SelectDict {
public:
    SelectDict() = default;

    static SelectDict build(std::span<const std::uint64_t> keys, const FidParams& p) {
        if (keys.size() != p.n) throw BuildError("key count does not match parameters");
        validate_keys(keys, p.universe);
        auto mid = mid_tables_for(p);
        std::uint64_t bs = p.block_size(), nb = p.blocks();
        BitBuffer bases, meta, midb, low;
        std::vector<std::uint64_t> pos, vals;
        std::uint64_t hp = 0;
        for (std::uint64_t k = 1; k <= nb; ++k) {
            std::uint64_t s = (k - 1) * bs;
            std::uint64_t m = std::min(bs, p.n - s);
            std::uint64_t base = k == 1 ? 0 : keys[s - 1];
            if (k > 1) bases.write_bits(base >> p.b, base_width(p));
            SplitBlock sb = split_block(keys.subspan(s, m), base, p);
            hp = 0;
            for (std::uint64_t i = 1; i <= m; ++i) {
                hp += sb.high[i - 1];
                if (sb.high[i - 1] != 0) {
                    pos.push_back(s + i);
                    vals.push_back(hp);
                }
            }
            EncodedABTree enc = mid->encode(sb.mid);
            meta.write_bits(enc.root_label, label_width(p));
            midb.append(enc.code);
            for (std::uint64_t v : sb.low) low.write_bits(v, p.b);
        }
        if (pos.size() > nb) throw BuildError("more nonzero high differences than blocks");
        for (std::uint64_t d = 1; pos.size() < nb; ++d) {
            pos.push_back(p.n + d);
            vals.push_back(hp);
        }
        unsigned vw = std::max(1u, width_for(*std::max_element(vals.begin(), vals.end())));
        BitBuffer global;
        global.write_bits(vw, 6);
        try {
            AssocKeyMap::build(pos, vals, position_universe(p), std::uint64_t{1} << vw, PredMode::dense, p.t)
                .serialize_body(global);
        } catch (const ModeError& e) {
            throw ParameterError(std::string("select dictionary: ") + e.what() + "; lower eps or t");
        }

        BitBuffer payload;
        std::vector<Section> sections;
        for (auto [name, part] : {std::pair<const char*, BitBuffer*>{"global", &global}, {"bases", &bases},
                                  {"meta", &meta}, {"mid", &midb}, {"low", &low}}) {
            sections.push_back({name, payload.size(), part->size()});
            payload.append(*part);
        }
        return load(p, std::move(payload), std::move(sections));
    }

    static SelectDict load(const FidParams& p, BitBuffer payload, std::vector<Section> sections = {}) {
        SelectDict d;
        d.p_ = p;
        d.mid_ = mid_tables_for(p);
        d.payload_ = std::move(payload);
        std::uint64_t bs = p.block_size(), nb = p.blocks();
        try {
            BitReader r(d.payload_);
            std::vector<Section> found;
            auto mark = [&](const char* name, std::size_t start) { found.push_back({name, start, r.position() - start}); };

            std::size_t start = r.position();
            auto vw = static_cast<unsigned>(r.read(6));
            if (vw == 0 || vw > p.w) throw CorruptionError("global high map value width out of range");
            d.global_ = AssocKeyMap::deserialize_body(r, nb, position_universe(p), std::uint64_t{1} << vw,
                                                      PredMode::dense, p.t);
            mark("global", start);

            start = r.position();
            d.bases_.assign(nb, 0);
            for (std::uint64_t k = 2; k <= nb; ++k) d.bases_[k - 1] = r.read(base_width(p));
            mark("bases", start);

            start = r.position();
            d.blocks_.resize(nb);
            for (std::uint64_t k = 1; k <= nb; ++k) {
                BlockInfo& bi = d.blocks_[k - 1];
                bi.m = std::min(bs, p.n - (k - 1) * bs);
                bi.phi = r.read(label_width(p));
            }
            mark("meta", start);

            start = r.position();
            for (BlockInfo& bi : d.blocks_) {
                if (d.mid_->count(bi.m, static_cast<Label>(bi.phi)) == 0) {
                    throw CorruptionError("mid root label has no instances");
                }
                bi.mid_off = r.position();
                bi.mid_len = d.mid_->code_bits(bi.m, static_cast<Label>(bi.phi));
                r.skip(bi.mid_len);
            }
            mark("mid", start);

            start = r.position();
            for (BlockInfo& bi : d.blocks_) {
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
            d.sections_ = std::move(found);
        } catch (const RangeError& e) {
            throw CorruptionError(std::string("truncated payload: ") + e.what());
        }
        return d;
    }

    // i-th smallest key, 1-based.
    std::uint64_t select(std::uint64_t i, QueryStats* st = nullptr) const {
        if (i == 0 || i > p_.n) throw RangeError("select: index outside [1, n]");
        std::uint64_t bs = p_.block_size();
        std::uint64_t k = (i - 1) / bs + 1, j = i - (k - 1) * bs;
        const BlockInfo& bi = blocks_[k - 1];
        std::uint64_t hp = 0;
        if (auto h = global_.pred(i, st); h && h->key > (k - 1) * bs) hp = h->value;
        CodeView cv{&payload_, bi.mid_off, bi.mid_len, bi.m, static_cast<Label>(bi.phi)};
        std::uint64_t mp = tree_prefix(*mid_, cv, j, st ? &st->tree_visits : nullptr);
        std::uint64_t lo = payload_.read_unchecked(bi.low_off + (j - 1) * p_.b, p_.b);
        return ((bases_[k - 1] + (hp << (2 * p_.h)) + mp) << p_.b) | lo;
    }

    const FidParams& params() const noexcept { return p_; }
    const BitBuffer& payload() const noexcept { return payload_; }
    const std::vector<Section>& sections() const noexcept { return sections_; }
    const std::vector<BlockInfo>& blocks() const noexcept { return blocks_; }
    const AssocKeyMap& global_high() const noexcept { return global_; }
    const CountTables& mid_tables() const { return *mid_; }
    std::uint64_t table_bits() const { return mid_->table_bits(); }

    // Positions > n in the global map.
    std::uint64_t dummy_count() const {
        std::uint64_t c = 0;
        for (std::size_t i = 0; i < global_.size(); ++i) c += global_.key_at(i) > p_.n;
        return c;
    }

private:
    static unsigned base_width(const FidParams& p) { return p.w > p.b ? p.w - p.b : 1; }
    static std::uint64_t position_universe(const FidParams& p) { return p.n + p.blocks() + 1; }
    static unsigned label_width(const FidParams& p) {
        return width_for(p.block_size() * (p.mid_alphabet() - 1));
    }

    FidParams p_;
    std::shared_ptr<const CountTables> mid_;
    BitBuffer payload_;
    std::vector<Section> sections_;
    AssocKeyMap global_;
    std::vector<std::uint64_t> bases_;
    std::vector<BlockInfo> blocks_;
};

inline SelectDict build_select_dict(std::span<const std::uint64_t> keys, const FidParams& p) {
    return SelectDict::build(keys, p);
}

inline std::uint64_t dict_select(const SelectDict& d, std::uint64_t i, QueryStats* st = nullptr) {
    return d.select(i, st);
}

}  // namespace sfid
