#pragma once
// Prefix sums over n entries of ℓ bits. With x_i = a_1 + … + a_i and
// s = ℓ − h, each x_i keeps its low s bits in a plain array; the rest is
// x_i >> s, stored per block as the block base plus an aB-tree over
// δ_i = (x_i >> s) − (x_{i−1} >> s) ∈ [0, 2^h]. There is no high part.
//
// Payload sections:
//   bases  x_{(k−1)B^t} >> s for k = 1..K+1, ℓ + ⌈log2 n⌉ bits each; the
//          last entry is x_n >> s, so block k's root label is base_{k+1} − base_k
//   mid    aB-tree codes
//   low    s bits per entry

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sfid/fid_core.hpp"
#include "sfid/unified_low.hpp"

namespace sfid {

struct PartialSumParams {
    std::uint64_t n = 0;
    unsigned ell = 1;  // entry width ℓ
    unsigned t = 1;
    Rational eps{1, 4};
    unsigned branching = 2;
    unsigned h = 1;

    std::uint64_t block_size() const { return std::uint64_t{1} << h; }
    std::uint64_t blocks() const { return (n + block_size() - 1) / block_size(); }
    unsigned low_bits() const { return ell - h; }
    unsigned base_bits() const { return ell + ceil_log2(n); }

    friend bool operator==(const PartialSumParams&, const PartialSumParams&) = default;
};

struct PartialSumOptions {
    Rational eps{1, 4};
    Rational c_lo{1, 2};
    Rational c_hi{4, 1};
    bool check_width = true;  // c_lo·log2 n <= ℓ <= c_hi·log2 n
};

inline PartialSumParams choose_partial_sum_params(std::uint64_t n, unsigned ell, unsigned t,
                                                  const PartialSumOptions& opt = {}) {
    if (n == 0) throw ParameterError("partial sum needs n >= 1");
    if (t == 0) throw ParameterError("t must be >= 1");
    if (ell == 0) throw ParameterError("entry width must be >= 1");
    if (opt.eps.num == 0 || opt.eps.den == 0) throw ParameterError("eps must be a positive rational");
    double lg = std::log2(static_cast<double>(std::max<std::uint64_t>(n, 2)));
    if (opt.check_width && n >= 4) {
        if (ell + 1e-9 < opt.c_lo.value() * lg || ell > opt.c_hi.value() * lg + 1e-9) {
            throw ParameterError("entry width " + std::to_string(ell) + " outside [" +
                                 std::to_string(opt.c_lo.value() * lg) + ", " +
                                 std::to_string(opt.c_hi.value() * lg) + "]");
        }
    }
    PartialSumParams p;
    p.n = n;
    p.ell = ell;
    p.t = t;
    p.eps = opt.eps;
    p.branching = branching_for(opt.eps.value() * lg / t);
    p.h = t * static_cast<unsigned>(std::countr_zero(p.branching));
    if (p.h >= ell) {
        throw ParameterError("low width l - h = " + std::to_string(int(ell) - int(p.h)) + " < 1; use a smaller t");
    }
    if (p.h >= 32) throw ParameterError("block size B^t above 2^31; lower t or eps");
    if (p.base_bits() > 64) throw ParameterError("prefix sums exceed 64 bits");
    return p;
}

inline std::shared_ptr<const CountTables> partial_sum_tables(const PartialSumParams& p) {
    std::uint64_t sigma = (std::uint64_t{1} << p.h) + 1;
    return shared_sum_tables(p.branching, p.t, sigma, p.block_size() * (sigma - 1) + 1);
}

class PartialSumStructure {
public:
    PartialSumStructure() = default;

    static PartialSumStructure build(std::span<const std::uint64_t> a, const PartialSumParams& p) {
        if (a.size() != p.n) throw BuildError("entry count does not match parameters");
        auto tables = partial_sum_tables(p);
        unsigned s = p.low_bits();
        std::uint64_t bs = p.block_size(), nb = p.blocks();
        BitBuffer bases, mid, low;
        std::uint64_t x = 0;
        for (std::uint64_t k = 1; k <= nb; ++k) {
            bases.write_bits(x >> s, p.base_bits());
            std::uint64_t first = (k - 1) * bs, m = std::min(bs, p.n - first);
            std::vector<std::uint64_t> deltas(m);
            for (std::uint64_t i = 0; i < m; ++i) {
                std::uint64_t v = a[first + i];
                if (width_for(v) > p.ell) {
                    throw DomainError("entry " + std::to_string(first + i + 1) + " = " + std::to_string(v) +
                                      " needs more than " + std::to_string(p.ell) + " bits");
                }
                std::uint64_t prev = x >> s;
                x += v;
                deltas[i] = (x >> s) - prev;
                if (deltas[i] > (std::uint64_t{1} << p.h)) throw BuildError("difference above 2^h");
                low.write_bits(x & low_mask(s), s);
            }
            mid.append(tables->encode(deltas).code);
        }
        bases.write_bits(x >> s, p.base_bits());
        BitBuffer payload;
        std::vector<Section> sections;
        for (auto [name, part] : {std::pair<const char*, BitBuffer*>{"bases", &bases}, {"mid", &mid}, {"low", &low}}) {
            sections.push_back({name, payload.size(), part->size()});
            payload.append(*part);
        }
        return load(p, std::move(payload), std::move(sections));
    }

    static PartialSumStructure load(const PartialSumParams& p, BitBuffer payload, std::vector<Section> sections = {}) {
        PartialSumStructure ps;
        ps.p_ = p;
        ps.tables_ = partial_sum_tables(p);
        ps.payload_ = std::move(payload);
        std::uint64_t bs = p.block_size(), nb = p.blocks();
        std::uint64_t phi_cap = ps.tables_->spec().phi_size;
        try {
            BitReader r(ps.payload_);
            std::vector<Section> found;
            auto mark = [&](const char* name, std::size_t start) { found.push_back({name, start, r.position() - start}); };

            std::size_t start = r.position();
            ps.bases_.resize(nb + 1);
            for (auto& b : ps.bases_) b = r.read(p.base_bits());
            mark("bases", start);

            start = r.position();
            ps.blocks_.resize(nb);
            for (std::uint64_t k = 1; k <= nb; ++k) {
                Block& bl = ps.blocks_[k - 1];
                bl.m = std::min(bs, p.n - (k - 1) * bs);
                if (ps.bases_[k] < ps.bases_[k - 1] || ps.bases_[k] - ps.bases_[k - 1] >= phi_cap) {
                    throw CorruptionError("block bases not consistent with the difference alphabet");
                }
                bl.phi = static_cast<Label>(ps.bases_[k] - ps.bases_[k - 1]);
                if (ps.tables_->count(bl.m, bl.phi) == 0) throw CorruptionError("block root label has no instances");
                bl.mid_off = r.position();
                bl.mid_len = ps.tables_->code_bits(bl.m, bl.phi);
                r.skip(bl.mid_len);
            }
            mark("mid", start);

            start = r.position();
            ps.low_off_ = r.position();
            r.skip(p.n * p.low_bits());
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
            ps.sections_ = std::move(found);
        } catch (const RangeError& e) {
            throw CorruptionError(std::string("truncated payload: ") + e.what());
        }
        return ps;
    }

    // a_1 + … + a_i.
    std::uint64_t prefix_sum(std::uint64_t i, QueryStats* st = nullptr) const {
        if (i == 0 || i > p_.n) throw RangeError("prefix_sum: index outside [1, n]");
        std::uint64_t bs = p_.block_size();
        std::uint64_t k = (i - 1) / bs + 1, j = i - (k - 1) * bs;
        const Block& bl = blocks_[k - 1];
        CodeView cv{&payload_, bl.mid_off, bl.mid_len, bl.m, bl.phi};
        std::uint64_t mp = tree_prefix(*tables_, cv, j, st ? &st->tree_visits : nullptr);
        unsigned s = p_.low_bits();
        std::uint64_t lo = payload_.read_unchecked(low_off_ + (i - 1) * s, s);
        return ((bases_[k - 1] + mp) << s) | lo;
    }

    const PartialSumParams& params() const noexcept { return p_; }
    const BitBuffer& payload() const noexcept { return payload_; }
    const std::vector<Section>& sections() const noexcept { return sections_; }
    const CountTables& tables() const { return *tables_; }
    std::uint64_t table_bits() const { return tables_->table_bits(); }

private:
    struct Block {
        std::uint64_t m = 0;
        Label phi = 0;
        std::size_t mid_off = 0;
        std::size_t mid_len = 0;
    };

    PartialSumParams p_;
    std::shared_ptr<const CountTables> tables_;
    BitBuffer payload_;
    std::vector<Section> sections_;
    std::vector<std::uint64_t> bases_;
    std::vector<Block> blocks_;
    std::size_t low_off_ = 0;
};

inline PartialSumStructure build_partial_sum(std::span<const std::uint64_t> a, const PartialSumParams& p) {
    return PartialSumStructure::build(a, p);
}

inline std::uint64_t prefix_sum(const PartialSumStructure& ps, std::uint64_t i, QueryStats* st = nullptr) {
    return ps.prefix_sum(i, st);
}

}  // namespace sfid
