#pragma once
// Augmented B-trees over (possibly incomplete) arrays, compressed to
// ⌈log2 N(m, φ)⌉ bits given the root label φ.
//
// Tree shape: the tree over m ≤ B^t leaves is the full B-ary tree of height t
// restricted to its first m leaves. A node of height d covering m leaves has
// ⌈m / B^{d−1}⌉ children, all complete except possibly the last.
//
// Counting: N(leaf, φ) = |{σ : leaf_label(σ) = φ}| and
// N(node, φ) = Σ_{φ⃗ : A(φ⃗) = φ} Π_i N(child_i, φ_i). Shapes are identified by
// (height, leaves), so one table serves every instance with the same spec.
//
// Coding: an instance rooted at a node with label φ is numbered in
// [0, N(node, φ)) as offset(φ⃗) + mixed-radix(r_1, …, r_ℓ), where offset(φ⃗)
// is the total weight of the child-label sequences preceding φ⃗ in
// lexicographic order and r_i is child i's own number in radix N(child_i, φ_i)
// (first child most significant). A query recovers one child's number from
// its parent's with a division and a modulus, so it decodes exactly one
// root-to-leaf path.

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sfid/bitio.hpp"
#include "sfid/errors.hpp"
#include "sfid/stats.hpp"

namespace sfid {

using BigCount = boost::multiprecision::cpp_int;
using Label = std::uint32_t;

struct ABTreeSpec {
    unsigned branching = 2;  // B
    unsigned height = 1;     // t
    std::uint64_t sigma_size = 1;
    std::uint64_t phi_size = 1;
    std::function<Label(std::uint64_t)> leaf_label;
    // Returns nullopt when the sequence has no label in Φ.
    std::function<std::optional<Label>(std::span<const Label>)> transition;

    std::uint64_t capacity() const {
        std::uint64_t c = 1;
        for (unsigned i = 0; i < height; ++i) c *= branching;
        return c;
    }
};

// Leaves σ ∈ [sigma_size] labelled by themselves; internal labels are subtree
// sums. Sums ≥ phi_size fall outside Φ.
inline ABTreeSpec make_sum_spec(unsigned branching, unsigned height, std::uint64_t sigma_size,
                                std::uint64_t phi_size) {
    ABTreeSpec s;
    s.branching = branching;
    s.height = height;
    s.sigma_size = sigma_size;
    s.phi_size = phi_size;
    s.leaf_label = [phi_size](std::uint64_t sigma) -> Label {
        if (sigma >= phi_size) throw DomainError("sum spec: leaf value outside label alphabet");
        return static_cast<Label>(sigma);
    };
    s.transition = [phi_size](std::span<const Label> seq) -> std::optional<Label> {
        std::uint64_t sum = 0;
        for (Label l : seq) sum += l;
        if (sum >= phi_size) return std::nullopt;
        return static_cast<Label>(sum);
    };
    return s;
}

inline std::uint64_t default_table_cap_bits() {
    if (const char* env = std::getenv("SFID_TABLE_CAP")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && v > 0) return v;
    }
    return std::uint64_t{1} << 32;
}

// ⌈log2 N⌉ for N >= 1 (0 when N <= 1).
inline std::uint64_t ceil_log2(const BigCount& n) {
    if (n <= 1) return 0;
    BigCount m = n - 1;
    return boost::multiprecision::msb(m) + 1;
}

inline void write_big(BitBuffer& out, const BigCount& value, std::uint64_t bits) {
    BigCount v = value;
    const BigCount mask = (BigCount{1} << 64) - 1;
    while (bits > 0) {
        unsigned w = bits >= 64 ? 64u : static_cast<unsigned>(bits);
        out.write_bits(static_cast<std::uint64_t>(v & mask), w);
        v >>= 64;
        bits -= w;
    }
}

inline BigCount read_big(const BitBuffer& in, std::size_t offset, std::uint64_t bits) {
    if (bits <= 64) return BigCount{in.read_bits(offset, static_cast<unsigned>(bits))};
    BigCount v = 0;
    std::uint64_t chunks = (bits + 63) / 64;
    for (std::uint64_t c = chunks; c-- > 0;) {
        std::uint64_t lo = c * 64;
        unsigned w = static_cast<unsigned>(std::min<std::uint64_t>(64, bits - lo));
        v <<= 64;
        v |= in.read_bits(offset + lo, w);
    }
    return v;
}

struct EncodedABTree {
    std::uint64_t m = 0;
    Label root_label = 0;
    BitBuffer code;
};

// Non-owning view of a code stored inside a larger buffer.
struct CodeView {
    const BitBuffer* bits = nullptr;
    std::size_t offset = 0;
    std::size_t length = 0;
    std::uint64_t m = 0;
    Label root_label = 0;

    static CodeView of(const EncodedABTree& enc) {
        return {&enc.code, 0, enc.code.size(), enc.m, enc.root_label};
    }
};

// A navigator walks one root-to-leaf path. At every internal node it sees the
// node label, the child labels and the child leaf counts and returns the child
// to descend into; at the leaf it turns the leaf value into the answer.
template <class N>
concept Navigator = requires(N nav, Label label, std::span<const Label> labels,
                             std::span<const std::uint64_t> sizes, std::uint64_t sigma) {
    { nav.descend(label, labels, sizes) } -> std::convertible_to<std::size_t>;
    nav.finish(sigma, label);
};

class CountTables {
public:
    explicit CountTables(ABTreeSpec spec, std::uint64_t cap_bits = default_table_cap_bits())
        : spec_(std::move(spec)), cap_bits_(cap_bits) {
        if (spec_.branching < 2) throw ParameterError("aB-tree: branching factor must be >= 2");
        if (spec_.height < 1) throw ParameterError("aB-tree: height must be >= 1");
        if (!spec_.leaf_label || !spec_.transition) throw ParameterError("aB-tree: incomplete spec");
        if (spec_.phi_size > (std::uint64_t{1} << 32)) {
            throw ParameterError("aB-tree: label alphabet above 2^32");
        }
    }

    const ABTreeSpec& spec() const noexcept { return spec_; }

    // Builds every shape an m-leaf tree uses. Not thread-safe; call before
    // sharing the tables with readers.
    void ensure(std::uint64_t m) {
        if (m == 0 || m > spec_.capacity()) {
            throw RangeError("aB-tree: leaf count " + std::to_string(m) + " outside [1, B^t]");
        }
        shape_for(spec_.height, m);
    }

    bool has(std::uint64_t m) const { return index_.count({spec_.height, m}) != 0; }

    const BigCount& count(std::uint64_t m, Label phi) const {
        static const BigCount zero = 0;
        const Shape& s = root(m);
        return phi < s.count.size() ? s.count[phi] : zero;
    }

    std::uint64_t code_bits(std::uint64_t m, Label phi) const { return ceil_log2(count(m, phi)); }

    // Labels with a non-zero count for an m-leaf tree, ascending.
    const std::vector<Label>& reachable(std::uint64_t m) const { return root(m).reachable; }

    // Size of everything built so far, as bits of a flat lookup table.
    std::uint64_t table_bits() const {
        std::uint64_t total = 0;
        unsigned lw = width_for(spec_.phi_size - 1);
        for (const Shape& s : shapes_) {
            std::uint64_t cw = 0;
            for (const auto& c : s.count) cw = std::max<std::uint64_t>(cw, ceil_log2(c + 1));
            total += s.count.size() * cw;
            if (s.height == 0) {
                total += s.members.size() * width_for(spec_.sigma_size - 1);
            } else {
                total += s.offset.size() * (s.children.size() * lw + cw);
            }
        }
        return total;
    }

    EncodedABTree encode(std::span<const std::uint64_t> leaves) const {
        if (leaves.empty() || leaves.size() > spec_.capacity()) {
            throw RangeError("encode_abtree: leaf count outside [1, B^t]");
        }
        std::uint32_t sid = root_id(leaves.size());
        auto [label, rank] = encode_node(sid, leaves);
        EncodedABTree enc;
        enc.m = leaves.size();
        enc.root_label = label;
        write_big(enc.code, rank, code_bits(enc.m, label));
        return enc;
    }

    std::vector<std::uint64_t> decode(const CodeView& cv) const {
        const Shape& s = root(cv.m);
        if (cv.root_label >= s.count.size() || s.count[cv.root_label] == 0) {
            throw CorruptionError("decode_leaves: root label has no instances");
        }
        if (cv.length != code_bits(cv.m, cv.root_label)) {
            throw CorruptionError("decode_leaves: code length does not match table");
        }
        BigCount r = read_big(*cv.bits, cv.offset, cv.length);
        if (r >= s.count[cv.root_label]) throw CorruptionError("decode_leaves: rank out of range");
        std::vector<std::uint64_t> out;
        out.reserve(cv.m);
        decode_node(root_id(cv.m), cv.root_label, r, out);
        return out;
    }

    std::vector<std::uint64_t> decode(const EncodedABTree& enc) const {
        return decode(CodeView::of(enc));
    }

    // Walks one root-to-leaf path. Each decoded node, leaf included, adds one
    // to `visits` (when given).
    template <Navigator Nav>
    auto query(const CodeView& cv, Nav& nav, std::uint64_t* visits = nullptr) const {
        std::uint32_t sid = root_id(cv.m);
        Label phi = cv.root_label;
        BigCount r = read_big(*cv.bits, cv.offset, cv.length);
        std::vector<Label> labels;
        for (;;) {
            const Shape& s = shapes_[sid];
            if (visits) ++*visits;
            if (s.height == 0) {
                std::uint64_t pos = static_cast<std::uint64_t>(r);
                std::uint64_t idx = s.bucket_begin[phi] + pos;
                if (idx >= s.bucket_begin[phi + 1]) throw CorruptionError("aB-tree: leaf rank out of range");
                return nav.finish(s.members[idx], phi);
            }
            std::size_t e = find_entry(s, phi, r);
            std::size_t arity = s.children.size();
            labels.assign(s.seq.begin() + e * arity, s.seq.begin() + (e + 1) * arity);
            r -= s.offset[e];
            std::size_t j = nav.descend(phi, std::span<const Label>(labels),
                                        std::span<const std::uint64_t>(s.child_leaves));
            if (j >= arity) {
                throw NavigatorError("navigator chose child " + std::to_string(j) + " of " +
                                     std::to_string(arity));
            }
            if (j + 1 < arity) {
                BigCount suffix = 1;
                for (std::size_t i = arity; i-- > j + 1;) suffix *= child_count(s, i, labels[i]);
                r /= suffix;
            }
            if (j > 0) r %= child_count(s, j, labels[j]);
            sid = s.children[j];
            phi = labels[j];
        }
    }

    template <Navigator Nav>
    auto query(const EncodedABTree& enc, Nav& nav, std::uint64_t* visits = nullptr) const {
        return query(CodeView::of(enc), nav, visits);
    }

private:
    struct Shape {
        unsigned height = 0;
        std::uint64_t leaves = 0;
        std::vector<std::uint32_t> children;
        std::vector<std::uint64_t> child_leaves;
        std::vector<BigCount> count;  // indexed by label
        std::vector<Label> reachable;
        std::vector<std::uint32_t> bucket_begin;  // per label, into entries / members
        std::vector<Label> seq;                   // internal: arity labels per entry
        std::vector<BigCount> offset;             // internal: start of each entry in its bucket
        std::vector<std::uint64_t> members;       // leaf: σ grouped by label
        std::vector<std::uint32_t> leaf_pos;      // leaf: σ → rank inside its label bucket
    };

    const Shape& root(std::uint64_t m) const { return shapes_[root_id(m)]; }

    std::uint32_t root_id(std::uint64_t m) const {
        auto it = index_.find({spec_.height, m});
        if (it == index_.end()) {
            throw ParameterError("aB-tree: tables not built for m=" + std::to_string(m));
        }
        return it->second;
    }

    const BigCount& child_count(const Shape& s, std::size_t i, Label l) const {
        return shapes_[s.children[i]].count[l];
    }

    void charge(std::uint64_t bits) {
        used_bits_ += bits;
        if (used_bits_ > cap_bits_) {
            throw ParameterError("aB-tree lookup table needs more than " + std::to_string(cap_bits_) +
                                 " bits (SFID_TABLE_CAP); shrink B or t");
        }
    }

    std::uint32_t shape_for(unsigned height, std::uint64_t leaves) {
        auto key = std::make_pair(height, leaves);
        if (auto it = index_.find(key); it != index_.end()) return it->second;
        Shape s;
        s.height = height;
        s.leaves = leaves;
        if (height == 0) {
            build_leaf(s);
        } else {
            std::uint64_t child_cap = 1;
            for (unsigned i = 1; i < height; ++i) child_cap *= spec_.branching;
            std::uint64_t nchild = (leaves + child_cap - 1) / child_cap;
            for (std::uint64_t c = 0; c < nchild; ++c) {
                std::uint64_t sz = c + 1 < nchild ? child_cap : leaves - c * child_cap;
                s.children.push_back(shape_for(height - 1, sz));
                s.child_leaves.push_back(sz);
            }
            build_internal(s);
        }
        shapes_.push_back(std::move(s));
        auto id = static_cast<std::uint32_t>(shapes_.size() - 1);
        index_.emplace(key, id);
        return id;
    }

    void build_leaf(Shape& s) {
        charge(spec_.sigma_size * 64);
        std::vector<Label> label_of(spec_.sigma_size);
        std::vector<std::uint64_t> per;
        for (std::uint64_t sigma = 0; sigma < spec_.sigma_size; ++sigma) {
            Label l = spec_.leaf_label(sigma);
            if (l >= spec_.phi_size) throw ParameterError("aB-tree: leaf label outside Φ");
            label_of[sigma] = l;
            if (per.size() <= l) per.resize(l + 1, 0);
            ++per[l];
        }
        s.bucket_begin.assign(per.size() + 1, 0);
        for (std::size_t l = 0; l < per.size(); ++l) s.bucket_begin[l + 1] = s.bucket_begin[l] + per[l];
        s.members.resize(spec_.sigma_size);
        s.leaf_pos.resize(spec_.sigma_size);
        std::vector<std::uint32_t> cursor(s.bucket_begin.begin(), s.bucket_begin.end() - 1);
        for (std::uint64_t sigma = 0; sigma < spec_.sigma_size; ++sigma) {
            Label l = label_of[sigma];
            s.leaf_pos[sigma] = cursor[l] - s.bucket_begin[l];
            s.members[cursor[l]++] = sigma;
        }
        s.count.resize(per.size());
        for (std::size_t l = 0; l < per.size(); ++l) {
            s.count[l] = per[l];
            if (per[l] != 0) s.reachable.push_back(static_cast<Label>(l));
        }
    }

    void build_internal(Shape& s) {
        std::size_t arity = s.children.size();
        std::vector<const std::vector<Label>*> reach(arity);
        long double tuples = 1;
        for (std::size_t i = 0; i < arity; ++i) {
            reach[i] = &shapes_[s.children[i]].reachable;
            tuples *= static_cast<long double>(reach[i]->size());
        }
        long double est = tuples * (arity * 32.0L + 64.0L);
        if (est > static_cast<long double>(cap_bits_ - std::min(cap_bits_, used_bits_))) {
            charge(cap_bits_ + 1);
        }
        auto total = static_cast<std::uint64_t>(tuples);
        charge(total * (arity * 32 + 64));

        // Pass 1: label of every tuple (lexicographic order).
        std::vector<Label> tuple_label(total);
        std::vector<std::uint32_t> per;
        std::vector<std::size_t> digit(arity, 0);
        std::vector<Label> seq(arity);
        const Label none = ~Label{0};
        for (std::uint64_t k = 0; k < total; ++k) {
            for (std::size_t i = 0; i < arity; ++i) seq[i] = (*reach[i])[digit[i]];
            std::optional<Label> l = spec_.transition(std::span<const Label>(seq));
            if (l && *l < spec_.phi_size) {
                tuple_label[k] = *l;
                if (per.size() <= *l) per.resize(*l + 1, 0);
                ++per[*l];
            } else {
                tuple_label[k] = none;
            }
            advance(digit, reach);
        }
        s.bucket_begin.assign(per.size() + 1, 0);
        for (std::size_t l = 0; l < per.size(); ++l) s.bucket_begin[l + 1] = s.bucket_begin[l] + per[l];
        std::size_t entries = s.bucket_begin.back();
        s.seq.resize(entries * arity);
        s.offset.resize(entries);
        s.count.assign(per.size(), 0);

        // Pass 2: place tuples into their label bucket, weights become offsets.
        std::vector<std::uint32_t> cursor(s.bucket_begin.begin(), s.bucket_begin.end() - 1);
        std::fill(digit.begin(), digit.end(), 0);
        for (std::uint64_t k = 0; k < total; ++k) {
            Label l = tuple_label[k];
            if (l != none) {
                std::uint32_t e = cursor[l]++;
                BigCount w = 1;
                for (std::size_t i = 0; i < arity; ++i) {
                    Label cl = (*reach[i])[digit[i]];
                    s.seq[e * arity + i] = cl;
                    w *= shapes_[s.children[i]].count[cl];
                }
                s.offset[e] = s.count[l];
                s.count[l] += w;
            }
            advance(digit, reach);
        }
        for (std::size_t l = 0; l < per.size(); ++l) {
            if (s.count[l] != 0) s.reachable.push_back(static_cast<Label>(l));
        }
    }

    static void advance(std::vector<std::size_t>& digit,
                        const std::vector<const std::vector<Label>*>& reach) {
        for (std::size_t i = digit.size(); i-- > 0;) {
            if (++digit[i] < reach[i]->size()) return;
            digit[i] = 0;
        }
    }

    std::pair<Label, BigCount> encode_node(std::uint32_t sid, std::span<const std::uint64_t> leaves) const {
        const Shape& s = shapes_[sid];
        if (s.height == 0) {
            std::uint64_t sigma = leaves[0];
            if (sigma >= spec_.sigma_size) {
                throw DomainError("encode_abtree: leaf " + std::to_string(sigma) + " outside Σ");
            }
            Label l = spec_.leaf_label(sigma);
            return {l, BigCount{s.leaf_pos[sigma]}};
        }
        std::size_t arity = s.children.size();
        std::vector<Label> labels(arity);
        std::vector<BigCount> ranks(arity);
        std::size_t pos = 0;
        for (std::size_t i = 0; i < arity; ++i) {
            auto [l, r] = encode_node(s.children[i], leaves.subspan(pos, s.child_leaves[i]));
            labels[i] = l;
            ranks[i] = std::move(r);
            pos += s.child_leaves[i];
        }
        std::optional<Label> phi = spec_.transition(std::span<const Label>(labels));
        if (!phi || *phi >= s.count.size() || s.count[*phi] == 0) {
            throw Error("encode_abtree: N(m, phi) = 0; transition and tables disagree");
        }
        std::uint32_t lo = s.bucket_begin[*phi], hi = s.bucket_begin[*phi + 1];
        while (lo < hi) {
            std::uint32_t mid = lo + (hi - lo) / 2;
            if (std::lexicographical_compare(s.seq.begin() + mid * arity, s.seq.begin() + (mid + 1) * arity,
                                             labels.begin(), labels.end())) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if (lo == s.bucket_begin[*phi + 1] ||
            !std::equal(labels.begin(), labels.end(), s.seq.begin() + lo * arity)) {
            throw Error("encode_abtree: child label sequence missing from table");
        }
        BigCount mixed = 0;
        for (std::size_t i = 0; i < arity; ++i) {
            mixed *= child_count(s, i, labels[i]);
            mixed += ranks[i];
        }
        return {*phi, s.offset[lo] + mixed};
    }

    std::size_t find_entry(const Shape& s, Label phi, const BigCount& r) const {
        if (phi + 1 >= s.bucket_begin.size()) throw CorruptionError("aB-tree: label outside table");
        auto first = s.offset.begin() + s.bucket_begin[phi];
        auto last = s.offset.begin() + s.bucket_begin[phi + 1];
        if (first == last) throw CorruptionError("aB-tree: label has no instances");
        auto it = std::upper_bound(first, last, r);
        return static_cast<std::size_t>(it - s.offset.begin()) - 1;
    }

    void decode_node(std::uint32_t sid, Label phi, BigCount r, std::vector<std::uint64_t>& out) const {
        const Shape& s = shapes_[sid];
        if (s.height == 0) {
            std::uint64_t idx = s.bucket_begin[phi] + static_cast<std::uint64_t>(r);
            out.push_back(s.members[idx]);
            return;
        }
        std::size_t e = find_entry(s, phi, r);
        std::size_t arity = s.children.size();
        r -= s.offset[e];
        std::vector<BigCount> digits(arity);
        for (std::size_t i = arity; i-- > 0;) {
            const BigCount& n = child_count(s, i, s.seq[e * arity + i]);
            digits[i] = r % n;
            r /= n;
        }
        for (std::size_t i = 0; i < arity; ++i) {
            decode_node(s.children[i], s.seq[e * arity + i], std::move(digits[i]), out);
        }
    }

    ABTreeSpec spec_;
    std::uint64_t cap_bits_;
    std::uint64_t used_bits_ = 0;
    std::deque<Shape> shapes_;
    std::map<std::pair<unsigned, std::uint64_t>, std::uint32_t> index_;
};

// Tables for every leaf count m ∈ [1, B^t].
inline CountTables build_count_tables(ABTreeSpec spec, std::uint64_t cap_bits = default_table_cap_bits()) {
    CountTables t(std::move(spec), cap_bits);
    for (std::uint64_t m = 1; m <= t.spec().capacity(); ++m) t.ensure(m);
    return t;
}

// ----------------------------------------------------------------------------
// Navigators for sum-labelled trees.
// ----------------------------------------------------------------------------

// δ_{≤i}: sum of the first i leaves (1 ≤ i ≤ m).
struct PrefixSumNav {
    std::uint64_t target;      // leaf index, 1-based
    std::uint64_t before = 0;  // leaves skipped so far
    std::uint64_t acc = 0;

    std::size_t descend(Label, std::span<const Label> labels, std::span<const std::uint64_t> sizes) {
        std::size_t j = 0;
        while (j + 1 < labels.size() && before + sizes[j] < target) {
            before += sizes[j];
            acc += labels[j];
            ++j;
        }
        return j;
    }
    std::uint64_t finish(std::uint64_t, Label leaf) { return acc + leaf; }
};

// Largest i with δ_{≤i} ≤ threshold, together with δ_{≤i}. Requires the
// subtree total to exceed the threshold (callers short-circuit otherwise).
struct RankNav {
    std::uint64_t threshold;
    std::uint64_t before = 0;
    std::uint64_t acc = 0;

    std::size_t descend(Label, std::span<const Label> labels, std::span<const std::uint64_t> sizes) {
        std::size_t j = 0;
        while (j + 1 < labels.size() && acc + labels[j] <= threshold) {
            acc += labels[j];
            before += sizes[j];
            ++j;
        }
        return j;
    }
    std::pair<std::uint64_t, std::uint64_t> finish(std::uint64_t, Label) { return {before, acc}; }
};

// Follows the leftmost child.
struct LeftmostNav {
    std::size_t descend(Label, std::span<const Label>, std::span<const std::uint64_t>) { return 0; }
    std::uint64_t finish(std::uint64_t sigma, Label) { return sigma; }
};

// Prefix query: δ_{≤i} with i = 0 answered without touching the tree.
inline std::uint64_t tree_prefix(const CountTables& tables, const CodeView& cv, std::uint64_t i,
                                 std::uint64_t* visits) {
    if (i == 0) return 0;
    if (i == cv.m) return cv.root_label;
    PrefixSumNav nav{i};
    return tables.query(cv, nav, visits);
}

// Rank query: largest i ∈ [0, m] with δ_{≤i} ≤ threshold, plus that prefix.
inline std::pair<std::uint64_t, std::uint64_t> tree_rank(const CountTables& tables, const CodeView& cv,
                                                         std::uint64_t threshold, std::uint64_t* visits) {
    if (cv.root_label <= threshold) return {cv.m, cv.root_label};
    RankNav nav{threshold};
    return tables.query(cv, nav, visits);
}

}  // namespace sfid
