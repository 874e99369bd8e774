#pragma once
// Global parameters of the FID family and the rounding rules that make them
// integral.

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "sfid/bitio.hpp"
#include "sfid/errors.hpp"

namespace sfid {

struct Rational {
    std::uint64_t num = 1;
    std::uint64_t den = 4;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

struct FidParams {
    std::uint64_t universe = 0;  // U
    std::uint64_t n = 0;
    unsigned t = 1;
    Rational eps{1, 4};
    Rational alpha_min{1, 2};
    unsigned branching = 2;  // B, a power of two
    unsigned h = 1;          // t · log2 B; the mid part is 2h bits wide
    unsigned b = 1;          // low-part width
    unsigned w = 1;          // word size: bits of U − 1
    std::uint64_t l_thresh = 0;  // longest interval kept as a sorted array
    unsigned t_inner = 1;        // height of embedded FIDs' trees (branching 2)
    Rational eps_inner{1, 4};

    std::uint64_t block_size() const { return std::uint64_t{1} << h; }  // B^t
    std::uint64_t blocks() const { return (n + block_size() - 1) / block_size(); }
    std::uint64_t mid_alphabet() const { return std::uint64_t{1} << (2 * h); }

    friend bool operator==(const FidParams&, const FidParams&) = default;
};

// Largest power of two B with B·log2 B <= target, at least 2.
inline unsigned branching_for(double target) {
    unsigned lb = 1;
    while (lb < 16) {
        double next = std::ldexp(1.0, static_cast<int>(lb + 1)) * (lb + 1);
        if (next > target + 1e-12) break;
        ++lb;
    }
    return 1u << lb;
}

inline double max_t_for(std::uint64_t universe) {
    double lg = std::log2(static_cast<double>(universe));
    double llg = std::log2(std::max(lg, 2.0));
    return std::max(1.0, lg / llg);
}

// Default longest sorted-array interval: ⌈log2 U⌉.
inline std::uint64_t default_l_thresh(std::uint64_t universe) { return std::max(1u, ceil_log2(universe)); }

// Tree height for embedded FIDs: enough binary levels to hold one block.
inline unsigned default_t_inner(unsigned h) { return std::max(1u, h); }

struct ParamOptions {
    Rational eps{1, 4};
    Rational alpha_min{1, 2};
    std::uint64_t l_thresh = 0;  // 0: default
    unsigned t_inner = 0;        // 0: default
    Rational eps_inner{0, 1};    // den 0 or num 0: same as eps
    bool check_density = true;   // U >= n^{1+alpha_min}
};

inline FidParams choose_params(std::uint64_t universe, std::uint64_t n, unsigned t,
                               const ParamOptions& opt = {}) {
    if (universe < 2) throw ParameterError("universe must be at least 2");
    if (n == 0) throw ParameterError("key count must be at least 1");
    if (n > universe) throw ParameterError("more keys than universe elements");
    if (t == 0) throw ParameterError("t must be >= 1");
    if (opt.eps.den == 0 || opt.eps.num == 0) throw ParameterError("eps must be a positive rational");
    double lg = std::log2(static_cast<double>(universe));
    double tmax = max_t_for(universe);
    if (static_cast<double>(t) > tmax + 1e-9) {
        throw ParameterError("t=" + std::to_string(t) + " exceeds log U / log log U = " +
                             std::to_string(tmax) + "; use t <= " + std::to_string(static_cast<unsigned>(tmax)));
    }
    if (opt.check_density && n > 1) {
        double need = (1.0 + opt.alpha_min.value()) * std::log2(static_cast<double>(n));
        if (lg + 1e-9 < need) {
            throw ParameterError("universe too dense: need U >= n^(1+alpha_min) (log2 U = " + std::to_string(lg) +
                                 ", required " + std::to_string(need) + ")");
        }
    }
    FidParams p;
    p.universe = universe;
    p.n = n;
    p.t = t;
    p.eps = opt.eps;
    p.alpha_min = opt.alpha_min;
    p.branching = branching_for(opt.eps.value() * lg / t);
    unsigned lb = static_cast<unsigned>(std::countr_zero(p.branching));
    p.h = t * lb;
    if (p.h >= 32) throw ParameterError("block size B^t above 2^31; lower t or eps");
    unsigned gap = ceil_log2((universe + n - 1) / n);  // ⌈log2 (U/n)⌉
    if (gap <= p.h) {
        unsigned suggest = gap > lb ? (gap - 1) / lb : 0;
        throw ParameterError("low width b = ceil(log2(U/n)) - h = " + std::to_string(int(gap) - int(p.h)) +
                             " < 1; use a smaller t" +
                             (suggest >= 1 ? " (t <= " + std::to_string(suggest) + ")" : std::string{}));
    }
    p.b = gap - p.h;
    p.w = width_for(universe - 1);
    p.l_thresh = opt.l_thresh != 0 ? opt.l_thresh : default_l_thresh(universe);
    p.t_inner = opt.t_inner != 0 ? opt.t_inner : default_t_inner(p.h);
    if ((std::uint64_t{1} << p.t_inner) < p.block_size()) {
        throw ParameterError("t_inner=" + std::to_string(p.t_inner) + " too small: 2^t_inner must cover B^t=" +
                             std::to_string(p.block_size()));
    }
    if (p.t_inner > 16) throw ParameterError("t_inner above 16");
    p.eps_inner = (opt.eps_inner.num == 0 || opt.eps_inner.den == 0) ? opt.eps : opt.eps_inner;
    return p;
}

}  // namespace sfid
