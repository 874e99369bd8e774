#pragma once
// Advanced FID: the basic block structure with each block's low array
// replaced by a unified region of the same b·m bits.

#include <cstdint>
#include <span>

#include "sfid/fid_core.hpp"

namespace sfid {

using AdvancedFid = FidCore;

inline AdvancedFid build_advanced(std::span<const std::uint64_t> keys, const FidParams& p) {
    return FidCore::build(keys, p, FidKind::advanced);
}

inline std::uint64_t advanced_rank(const FidCore& f, std::uint64_t x, QueryStats* st = nullptr) {
    return f.rank(x, st);
}

inline std::uint64_t advanced_select(const FidCore& f, std::uint64_t i, QueryStats* st = nullptr) {
    return f.select(i, st);
}

}  // namespace sfid
