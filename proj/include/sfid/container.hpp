#pragma once
// On-disk formats. Integers are little-endian.
//
// Container:
//   "SFID1"  kind:u8  header: 14 × u64
//   sections: u32 count, then per section u8 name length, name, u64 bit offset, u64 bit length
//   payload:  u64 bit length, ⌈bits/8⌉ bytes
//   audit:    u32 byte length, JSON text
//   crc32 of everything above: u32
//
// Header fields: U (or ℓ for partial sums), n, t, ε num, ε den, B, h, b,
// L_thrd, t_inner, ε' num, ε' den, alpha_min num, alpha_min den.
//
// Key file: U:u64, n:u64, then n u64 values.

#include <boost/crc.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <variant>
#include <vector>

#include "sfid/fid_core.hpp"
#include "sfid/partial_sum.hpp"
#include "sfid/select_dict.hpp"
#include "sfid/space.hpp"

namespace sfid {

inline constexpr char kMagic[5] = {'S', 'F', 'I', 'D', '1'};
inline constexpr std::size_t kHeaderFields = 14;

using Structure = std::variant<FidCore, SelectDict, PartialSumStructure>;

struct Container {
    FidKind kind = FidKind::basic;
    Structure body;
    std::string audit;  // JSON report written at build time
};

inline SpaceReport audit_structure(const Structure& s, const BudgetConstants& c = {}) {
    if (auto f = std::get_if<FidCore>(&s)) return audit_fid(*f, c);
    if (auto d = std::get_if<SelectDict>(&s)) return audit_select_dict(*d, c);
    return audit_partial_sum(std::get<PartialSumStructure>(s), c);
}

namespace detail {

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v, unsigned bytes = 8) {
    for (unsigned i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint64_t get(unsigned bytes = 8) {
        need(bytes);
        std::uint64_t v = 0;
        for (unsigned i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += bytes;
        return v;
    }

    const std::uint8_t* take(std::size_t bytes) {
        need(bytes);
        const std::uint8_t* p = data_ + pos_;
        pos_ += bytes;
        return p;
    }

    std::size_t position() const { return pos_; }

private:
    void need(std::size_t bytes) const {
        if (bytes > size_ - pos_) throw FormatError("container truncated");
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
    boost::crc_32_type crc;
    crc.process_bytes(data, size);
    return crc.checksum();
}

inline std::vector<std::uint64_t> fid_header(const FidParams& p) {
    return {p.universe, p.n, p.t, p.eps.num, p.eps.den, p.branching, p.h, p.b,
            p.l_thresh, p.t_inner, p.eps_inner.num, p.eps_inner.den, p.alpha_min.num, p.alpha_min.den};
}

inline std::vector<std::uint64_t> psum_header(const PartialSumParams& p) {
    return {p.ell, p.n, p.t, p.eps.num, p.eps.den, p.branching, p.h, p.low_bits(), 0, 0, 0, 0, 0, 0};
}

inline FidParams fid_params_from(const std::vector<std::uint64_t>& h) {
    ParamOptions o;
    o.eps = {h[3], h[4]};
    o.l_thresh = h[8];
    o.t_inner = static_cast<unsigned>(h[9]);
    o.eps_inner = {h[10], h[11]};
    o.alpha_min = {h[12], h[13]};
    o.check_density = false;
    FidParams p;
    try {
        p = choose_params(h[0], h[1], static_cast<unsigned>(h[2]), o);
    } catch (const Error& e) {
        throw FormatError(std::string("container parameters rejected: ") + e.what());
    }
    if (fid_header(p) != h) throw FormatError("container header disagrees with derived parameters");
    return p;
}

inline PartialSumParams psum_params_from(const std::vector<std::uint64_t>& h) {
    PartialSumOptions o;
    o.eps = {h[3], h[4]};
    o.check_width = false;
    if (h[0] == 0 || h[0] > 64) throw FormatError("partial-sum entry width out of range");
    PartialSumParams p;
    try {
        p = choose_partial_sum_params(h[1], static_cast<unsigned>(h[0]), static_cast<unsigned>(h[2]), o);
    } catch (const Error& e) {
        throw FormatError(std::string("container parameters rejected: ") + e.what());
    }
    if (psum_header(p) != h) throw FormatError("container header disagrees with derived parameters");
    return p;
}

}  // namespace detail

inline Container make_container(Structure s, const BudgetConstants& c = {}) {
    Container out;
    if (auto f = std::get_if<FidCore>(&s)) {
        out.kind = f->kind();
    } else if (std::holds_alternative<SelectDict>(s)) {
        out.kind = FidKind::select_dict;
    } else {
        out.kind = FidKind::partial_sum;
    }
    out.audit = audit_structure(s, c).to_json().dump();
    out.body = std::move(s);
    return out;
}

inline std::vector<std::uint8_t> encode_container(const Container& c) {
    std::vector<std::uint64_t> header;
    const BitBuffer* payload = nullptr;
    const std::vector<Section>* sections = nullptr;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PartialSumStructure>) {
                header = detail::psum_header(s.params());
            } else {
                header = detail::fid_header(s.params());
            }
            payload = &s.payload();
            sections = &s.sections();
        },
        c.body);
    std::vector<std::uint8_t> out(kMagic, kMagic + 5);
    out.push_back(static_cast<std::uint8_t>(c.kind));
    for (auto v : header) detail::put_u64(out, v);
    detail::put_u64(out, sections->size(), 4);
    for (const auto& s : *sections) {
        if (s.name.size() > 255) throw FormatError("section name too long");
        out.push_back(static_cast<std::uint8_t>(s.name.size()));
        out.insert(out.end(), s.name.begin(), s.name.end());
        detail::put_u64(out, s.offset);
        detail::put_u64(out, s.length);
    }
    detail::put_u64(out, payload->size());
    auto bytes = payload->to_bytes();
    out.insert(out.end(), bytes.begin(), bytes.end());
    detail::put_u64(out, c.audit.size(), 4);
    out.insert(out.end(), c.audit.begin(), c.audit.end());
    detail::put_u64(out, detail::crc32(out.data(), out.size()), 4);
    return out;
}

inline Container decode_container(const std::vector<std::uint8_t>& data) {
    if (data.size() < 5 + 1 + 8 * kHeaderFields + 4 + 8 + 4 + 4) throw FormatError("container too short");
    if (std::memcmp(data.data(), kMagic, 5) != 0) throw FormatError("bad magic (expected SFID1)");
    std::size_t body = data.size() - 4;
    std::uint32_t stored = 0;
    for (unsigned i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(data[body + i]) << (8 * i);
    if (stored != detail::crc32(data.data(), body)) throw CorruptionError("container checksum mismatch");

    detail::ByteReader r(data.data() + 5, body - 5);
    Container c;
    std::uint64_t kind = r.get(1);
    if (kind < 1 || kind > 4) throw FormatError("unknown structure kind " + std::to_string(kind));
    c.kind = static_cast<FidKind>(kind);
    std::vector<std::uint64_t> header(kHeaderFields);
    for (auto& v : header) v = r.get();
    std::uint64_t count = r.get(4);
    if (count > 64) throw FormatError("implausible section count");
    std::vector<Section> sections(count);
    for (auto& s : sections) {
        std::uint64_t len = r.get(1);
        const std::uint8_t* name = r.take(len);
        s.name.assign(reinterpret_cast<const char*>(name), len);
        s.offset = r.get();
        s.length = r.get();
    }
    std::uint64_t bits = r.get();
    std::uint64_t nbytes = (bits + 7) / 8;
    if (nbytes > body) throw FormatError("payload length exceeds container");
    const std::uint8_t* raw = r.take(nbytes);
    BitBuffer payload = BitBuffer::from_bytes(raw, nbytes, bits);
    std::uint64_t alen = r.get(4);
    const std::uint8_t* audit = r.take(alen);
    c.audit.assign(reinterpret_cast<const char*>(audit), alen);
    if (r.position() != body - 5) throw FormatError("trailing bytes before checksum");

    try {
        switch (c.kind) {
            case FidKind::basic:
            case FidKind::advanced:
                c.body = FidCore::load(detail::fid_params_from(header), c.kind, std::move(payload), sections);
                break;
            case FidKind::select_dict:
                c.body = SelectDict::load(detail::fid_params_from(header), std::move(payload), sections);
                break;
            case FidKind::partial_sum:
                c.body = PartialSumStructure::load(detail::psum_params_from(header), std::move(payload), sections);
                break;
        }
    } catch (const CorruptionError& e) {
        throw FormatError(std::string("payload rejected: ") + e.what());
    }
    return c;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write to " + path);
}

inline Container load_container(const std::string& path) { return decode_container(read_file_bytes(path)); }

inline void save_container(const std::string& path, const Container& c) { write_file_bytes(path, encode_container(c)); }

struct KeyFile {
    std::uint64_t universe = 0;
    std::vector<std::uint64_t> values;
};

inline std::vector<std::uint8_t> encode_key_file(const KeyFile& k) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + 8 * k.values.size());
    detail::put_u64(out, k.universe);
    detail::put_u64(out, k.values.size());
    for (auto v : k.values) detail::put_u64(out, v);
    return out;
}

// Values must lie in [0, U); `sorted` additionally requires strict increase.
inline KeyFile decode_key_file(const std::vector<std::uint8_t>& data, bool sorted = true) {
    detail::ByteReader r(data.data(), data.size());
    KeyFile k;
    k.universe = r.get();
    std::uint64_t n = r.get();
    if (data.size() != 16 + 8 * n) throw FormatError("key file length does not match its header");
    k.values.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        k.values[i] = r.get();
        if (k.values[i] >= k.universe) throw FormatError("key " + std::to_string(i) + " outside universe");
        if (sorted && i > 0 && k.values[i] <= k.values[i - 1]) {
            throw FormatError("keys not strictly increasing at index " + std::to_string(i));
        }
    }
    return k;
}

inline KeyFile read_key_file(const std::string& path, bool sorted = true) {
    return decode_key_file(read_file_bytes(path), sorted);
}

inline void write_key_file(const std::string& path, const KeyFile& k) { write_file_bytes(path, encode_key_file(k)); }

}  // namespace sfid
