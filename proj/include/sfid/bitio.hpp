#pragma once
// Bit-addressed storage and the spill-over primitive.
//
// Bits are stored least-significant-bit first: bit k of the buffer lives in
// word k / 64 at position k % 64, and a field written at offset o with width w
// occupies bits [o, o + w) with its lowest bit at o.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sfid/errors.hpp"

namespace sfid {

class BitBuffer {
public:
    BitBuffer() = default;

    std::size_t size() const noexcept { return length_; }
    bool empty() const noexcept { return length_ == 0; }
    const std::vector<std::uint64_t>& words() const noexcept { return words_; }

    void write_bits(std::uint64_t value, unsigned width) {
        if (width > 64) {
            throw DomainError("write_bits: width " + std::to_string(width) + " exceeds 64");
        }
        if (width < 64 && (value >> width) != 0) {
            throw DomainError("write_bits: value " + std::to_string(value) +
                              " does not fit in " + std::to_string(width) + " bits");
        }
        if (width == 0) return;
        std::size_t need = (length_ + width + 63) / 64;
        if (words_.size() < need) words_.resize(need, 0);
        std::size_t word = length_ / 64;
        unsigned shift = length_ % 64;
        words_[word] |= value << shift;
        if (shift != 0 && shift + width > 64) {
            words_[word + 1] |= value >> (64 - shift);
        }
        length_ += width;
    }

    std::uint64_t read_bits(std::size_t offset, unsigned width) const {
        if (width > 64) {
            throw DomainError("read_bits: width " + std::to_string(width) + " exceeds 64");
        }
        if (offset > length_ || width > length_ - offset) {
            throw RangeError("read_bits: [" + std::to_string(offset) + ", +" +
                             std::to_string(width) + ") outside buffer of " +
                             std::to_string(length_) + " bits");
        }
        return read_unchecked(offset, width);
    }

    // Caller guarantees offset + width <= size() and width <= 64.
    std::uint64_t read_unchecked(std::size_t offset, unsigned width) const noexcept {
        if (width == 0) return 0;
        std::size_t word = offset / 64;
        unsigned shift = offset % 64;
        std::uint64_t v = words_[word] >> shift;
        if (shift != 0 && shift + width > 64) {
            v |= words_[word + 1] << (64 - shift);
        }
        return width == 64 ? v : v & ((std::uint64_t{1} << width) - 1);
    }

    bool bit(std::size_t offset) const { return read_bits(offset, 1) != 0; }

    void append(const BitBuffer& other) { append(other, 0, other.size()); }

    void append(const BitBuffer& other, std::size_t offset, std::size_t length) {
        while (length >= 64) {
            write_bits(other.read_bits(offset, 64), 64);
            offset += 64;
            length -= 64;
        }
        write_bits(other.read_bits(offset, static_cast<unsigned>(length)),
                   static_cast<unsigned>(length));
    }

    // Appends `count` zero bits.
    void pad(std::size_t count) {
        length_ += count;
        words_.resize((length_ + 63) / 64, 0);
    }

    // Byte image (LSB-first within each byte), zero padded to a byte boundary.
    std::vector<std::uint8_t> to_bytes() const {
        std::vector<std::uint8_t> out((length_ + 7) / 8, 0);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8)));
        }
        return out;
    }

    static BitBuffer from_bytes(const std::uint8_t* data, std::size_t nbytes, std::size_t nbits) {
        if (nbits > nbytes * 8) throw FormatError("bit length exceeds byte image");
        BitBuffer buf;
        buf.words_.assign((nbits + 63) / 64, 0);
        for (std::size_t i = 0; i < (nbits + 7) / 8; ++i) {
            buf.words_[i / 8] |= std::uint64_t{data[i]} << (8 * (i % 8));
        }
        buf.length_ = nbits;
        if (nbits % 64 != 0 && !buf.words_.empty()) {
            buf.words_.back() &= (std::uint64_t{1} << (nbits % 64)) - 1;
        }
        return buf;
    }

    std::string to_string() const {
        std::string s;
        s.reserve(length_);
        for (std::size_t i = 0; i < length_; ++i) s.push_back(read_unchecked(i, 1) ? '1' : '0');
        return s;
    }

    friend bool operator==(const BitBuffer& a, const BitBuffer& b) {
        return a.length_ == b.length_ && a.words_ == b.words_;
    }

private:
    std::vector<std::uint64_t> words_;
    std::size_t length_ = 0;
};

inline BitBuffer write_bits(BitBuffer buf, std::uint64_t value, unsigned width) {
    buf.write_bits(value, width);
    return buf;
}

inline std::uint64_t read_bits(const BitBuffer& buf, std::size_t offset, unsigned width) {
    return buf.read_bits(offset, width);
}

// Sequential reader over a BitBuffer.
class BitReader {
public:
    explicit BitReader(const BitBuffer& buf, std::size_t offset = 0) : buf_(&buf), pos_(offset) {}

    std::uint64_t read(unsigned width) {
        std::uint64_t v = buf_->read_bits(pos_, width);
        pos_ += width;
        return v;
    }

    BitBuffer read_buffer(std::size_t length) {
        BitBuffer out;
        out.append(*buf_, pos_, length);
        pos_ += length;
        return out;
    }

    void skip(std::size_t bits) {
        if (bits > buf_->size() - pos_) throw RangeError("BitReader::skip past end");
        pos_ += bits;
    }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return buf_->size() - pos_; }

private:
    const BitBuffer* buf_;
    std::size_t pos_;
};

// Number of bits needed to write any value in [0, v].
constexpr unsigned width_for(std::uint64_t v) noexcept {
    return static_cast<unsigned>(std::bit_width(v));
}

// ⌈log2 x⌉ for x >= 1.
constexpr unsigned ceil_log2(std::uint64_t x) noexcept {
    return x <= 1 ? 0u : static_cast<unsigned>(std::bit_width(x - 1));
}

// ---------------------------------------------------------------------------
// Spill-over representation: x ∈ [N] is split into `memory_bits` low bits
// (width m) and a spill in [K], x = spill · 2^m + memory. m is the least value
// with ⌈N / 2^m⌉ < 2·K_min, so 2^m·K ≥ N and m + log2 K ≤ log2 N + 2/K_min.
// ---------------------------------------------------------------------------

struct SpillCode {
    std::uint64_t memory_bits = 0;
    unsigned memory_width = 0;  // m
    std::uint64_t spill = 0;
    std::uint64_t spill_universe = 1;  // K

    friend bool operator==(const SpillCode&, const SpillCode&) = default;
};

struct SpillShape {
    unsigned memory_width;
    std::uint64_t spill_universe;
};

inline SpillShape spill_shape(std::uint64_t domain, std::uint64_t k_min) {
    if (domain == 0) throw DomainError("spill: domain size must be >= 1");
    if (k_min == 0) throw DomainError("spill: K_min must be >= 1");
    // Smallest m with (2·K_min − 1)·2^m >= N.
    std::uint64_t limit = 2 * k_min - 1;
    std::uint64_t q = (domain - 1) / limit + 1;
    unsigned m = ceil_log2(q);
    std::uint64_t k = m >= 64 ? 1 : ((domain - 1) >> m) + 1;
    return {m, k};
}

inline SpillCode spill_encode(std::uint64_t x, std::uint64_t domain, std::uint64_t k_min) {
    SpillShape s = spill_shape(domain, k_min);
    if (x >= domain) {
        throw DomainError("spill_encode: " + std::to_string(x) + " outside [0, " +
                          std::to_string(domain) + ")");
    }
    SpillCode c;
    c.memory_width = s.memory_width;
    c.spill_universe = s.spill_universe;
    if (s.memory_width >= 64) {
        c.memory_bits = x;
        c.spill = 0;
    } else {
        c.memory_bits = x & ((std::uint64_t{1} << s.memory_width) - 1);
        c.spill = x >> s.memory_width;
    }
    return c;
}

inline std::uint64_t spill_decode(const SpillCode& code, std::uint64_t domain) {
    if (code.spill >= code.spill_universe) throw CorruptionError("spill_decode: spill out of range");
    std::uint64_t x = code.memory_width >= 64 ? code.memory_bits
                                              : (code.spill << code.memory_width) | code.memory_bits;
    if (x >= domain) {
        throw CorruptionError("spill_decode: decoded " + std::to_string(x) + " >= " +
                              std::to_string(domain));
    }
    return x;
}

}  // namespace sfid
