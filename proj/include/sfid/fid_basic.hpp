#pragma once
// Basic FID: block structure with plain b-bit low arrays.

#include <cstdint>
#include <span>

#include "sfid/fid_core.hpp"

namespace sfid {

using BasicFid = FidCore;

inline BasicFid build_basic(std::span<const std::uint64_t> keys, const FidParams& p) {
    return FidCore::build(keys, p, FidKind::basic);
}

inline std::uint64_t fid_rank(const FidCore& f, std::uint64_t x, QueryStats* st = nullptr) { return f.rank(x, st); }

inline std::uint64_t fid_select(const FidCore& f, std::uint64_t i, QueryStats* st = nullptr) {
    return f.select(i, st);
}

}  // namespace sfid
