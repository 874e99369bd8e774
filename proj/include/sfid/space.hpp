#pragma once
// Space accounting: per-section bit counts, the information-theoretic
// optimum, and the redundancy budgets each structure must meet.

#include <gmp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sfid/fid_core.hpp"
#include "sfid/partial_sum.hpp"
#include "sfid/select_dict.hpp"
#include "sfid/stats.hpp"

namespace sfid {

struct BudgetConstants {
    double c_blk = 16;    // per-block header words
    double c_inter = 16;  // inter-block predecessor words
    double c_pred = 16;   // global select-dictionary map
    double c1 = 2, c2 = 8;  // sparse predecessor probes: c1·log2 log2 U + c2
    double c3 = 2, c4 = 6;  // dense predecessor probes: c3·log2(t + 1) + c4
    double c_tree = 3;    // partial-sum per-block slack
    double c_glob = 8;    // partial-sum global slack, in units of log2 n
};

// ⌈log2 C(a, k)⌉, exact.
inline std::uint64_t ceil_log2_binomial(std::uint64_t a, std::uint64_t k) {
    if (k > a) return 0;
    mpz_t c;
    mpz_init(c);
    mpz_bin_uiui(c, a, std::min(k, a - k));
    std::uint64_t bits = 0;
    if (mpz_cmp_ui(c, 1) > 0) {
        mpz_sub_ui(c, c, 1);
        bits = mpz_sizeinbase(c, 2);
    }
    mpz_clear(c);
    return bits;
}

struct BudgetTerm {
    std::string name;
    double measured = 0;
    double limit = 0;
    std::string formula;
    bool ok() const { return measured <= limit + 1e-9; }
};

struct SpaceReport {
    std::string kind;
    std::vector<Section> sections;
    std::uint64_t payload_bits = 0;
    std::uint64_t optimum = 0;
    std::int64_t redundancy = 0;
    std::uint64_t table_bits = 0;
    BudgetConstants constants;
    std::vector<BudgetTerm> budgets;

    bool ok() const {
        return std::all_of(budgets.begin(), budgets.end(), [](const BudgetTerm& b) { return b.ok(); });
    }

    std::uint64_t section_sum() const {
        std::uint64_t s = 0;
        for (const auto& sec : sections) s += sec.length;
        return s;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["kind"] = kind;
        nlohmann::ordered_json secs = nlohmann::ordered_json::array();
        for (const auto& s : sections) secs.push_back({{"name", s.name}, {"offset", s.offset}, {"bits", s.length}});
        j["sections"] = secs;
        j["payload_bits"] = payload_bits;
        j["optimum_bits"] = optimum;
        j["redundancy_bits"] = redundancy;
        j["table_bits"] = table_bits;
        j["constants"] = {{"C_blk", constants.c_blk},   {"C_inter", constants.c_inter}, {"C_pred", constants.c_pred},
                          {"c1", constants.c1},         {"c2", constants.c2},           {"c3", constants.c3},
                          {"c4", constants.c4},         {"c_tree", constants.c_tree},   {"c_glob", constants.c_glob}};
        nlohmann::ordered_json terms = nlohmann::ordered_json::array();
        for (const auto& b : budgets) {
            terms.push_back({{"name", b.name}, {"measured", b.measured}, {"limit", b.limit}, {"formula", b.formula},
                             {"ok", b.ok()}});
        }
        j["budgets"] = terms;
        j["ok"] = ok();
        return j;
    }
};

// Redundancy limit for an FID-shaped structure given per-block (m_k, Δ_k):
//   [Σ ⌈log2 C(Δ_k + m_k, m_k − 1)⌉ + n·b − opt]⁺
//   + C_blk·Σ (w + w·Δ_k / 2^{2h}) + C_inter·(w·n/B^t + w) + table bits
inline double fid_redundancy_limit(const FidParams& p, const std::vector<std::pair<std::uint64_t, std::uint64_t>>& blocks,
                                   std::uint64_t optimum, std::uint64_t table_bits, const BudgetConstants& c) {
    double coded = 0, header = 0;
    double w = p.w;
    for (auto [m, delta] : blocks) {
        coded += static_cast<double>(ceil_log2_binomial(delta + m, m - 1));
        header += w + w * std::ldexp(static_cast<double>(delta), -static_cast<int>(2 * p.h));
    }
    double base = coded + static_cast<double>(p.n) * p.b - static_cast<double>(optimum);
    double inter = w * static_cast<double>(p.n) / static_cast<double>(p.block_size()) + w;
    return std::max(0.0, base) + c.c_blk * header + c.c_inter * inter + static_cast<double>(table_bits);
}

inline SpaceReport audit_fid(const FidCore& f, const BudgetConstants& c = {}) {
    const FidParams& p = f.params();
    SpaceReport r;
    r.kind = kind_name(f.kind());
    r.sections = f.sections();
    r.payload_bits = f.payload().size();
    r.optimum = ceil_log2_binomial(p.universe, p.n);
    r.redundancy = static_cast<std::int64_t>(r.payload_bits) - static_cast<std::int64_t>(r.optimum);
    r.table_bits = f.table_bits();
    r.constants = c;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> blocks;
    for (const auto& bi : f.blocks()) blocks.emplace_back(bi.m, bi.delta);
    r.budgets.push_back({"redundancy", static_cast<double>(r.redundancy),
                         fid_redundancy_limit(p, blocks, r.optimum, r.table_bits, c),
                         "[sum ceil(log2 C(D_k+m_k, m_k-1)) + n*b - opt]+ + C_blk*sum(w + w*D_k/2^(2h)) + "
                         "C_inter*(w*n/B^t + w) + table_bits"});
    std::uint64_t low = 0;
    for (const auto& s : r.sections) {
        if (s.name == "low") low = s.length;
    }
    r.budgets.push_back({"low_footprint", static_cast<double>(low), static_cast<double>(p.b * p.n), "b*n"});
    return r;
}

inline SpaceReport audit_select_dict(const SelectDict& d, const BudgetConstants& c = {}) {
    const FidParams& p = d.params();
    SpaceReport r;
    r.kind = kind_name(FidKind::select_dict);
    r.sections = d.sections();
    r.payload_bits = d.payload().size();
    r.optimum = ceil_log2_binomial(p.universe, p.n);
    r.redundancy = static_cast<std::int64_t>(r.payload_bits) - static_cast<std::int64_t>(r.optimum);
    r.table_bits = d.table_bits();
    r.constants = c;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> blocks;
    std::uint64_t bs = p.block_size(), prev = 0;
    for (std::uint64_t k = 1; k <= d.blocks().size(); ++k) {
        std::uint64_t end = d.select(std::min(k * bs, p.n)) >> p.b;
        blocks.emplace_back(d.blocks()[k - 1].m, end - prev);
        prev = end;
    }
    r.budgets.push_back({"redundancy", static_cast<double>(r.redundancy),
                         fid_redundancy_limit(p, blocks, r.optimum, r.table_bits, c),
                         "same limit as the FID with the same blocks"});
    double lg = std::log2(static_cast<double>(std::max<std::uint64_t>(p.n, 2)));
    r.budgets.push_back({"global_map", static_cast<double>(r.sections.front().length),
                         c.c_pred * static_cast<double>(p.blocks()) * 2 * lg, "C_pred*(n/B^t)*2*log2 n"});
    return r;
}

inline SpaceReport audit_partial_sum(const PartialSumStructure& ps, const BudgetConstants& c = {}) {
    const PartialSumParams& p = ps.params();
    SpaceReport r;
    r.kind = kind_name(FidKind::partial_sum);
    r.sections = ps.sections();
    r.payload_bits = ps.payload().size();
    r.optimum = p.n * p.ell;
    r.redundancy = static_cast<std::int64_t>(r.payload_bits) - static_cast<std::int64_t>(r.optimum);
    r.table_bits = ps.table_bits();
    r.constants = c;
    double lg = std::log2(static_cast<double>(std::max<std::uint64_t>(p.n, 2)));
    double limit = static_cast<double>(p.blocks()) * (p.ell + ceil_log2(p.n) + c.c_tree) +
                   static_cast<double>(r.table_bits) + c.c_glob * lg;
    r.budgets.push_back({"redundancy", static_cast<double>(r.redundancy), limit,
                         "(n/B^t)*(l + ceil(log2 n) + c_tree) + table_bits + c_glob*log2 n"});
    return r;
}

inline double sparse_probe_budget(std::uint64_t universe, const BudgetConstants& c = {}) {
    return c.c1 * std::log2(std::log2(std::max(static_cast<double>(universe), 4.0))) + c.c2;
}

inline double dense_probe_budget(unsigned t, const BudgetConstants& c = {}) {
    return c.c3 * std::log2(static_cast<double>(t) + 1.0) + c.c4;
}

inline nlohmann::ordered_json stats_json(const StatsSummary& s) {
    auto one = [&](const char* name, std::uint64_t QueryStats::*field) {
        return nlohmann::ordered_json{{"stage", name}, {"max", s.max.*field}, {"mean", s.mean(field)}};
    };
    nlohmann::ordered_json j;
    j["queries"] = s.queries;
    j["stages"] = {one("pred_probes", &QueryStats::pred_probes),
                   one("pred_peak", &QueryStats::pred_peak),
                   one("tree_visits", &QueryStats::tree_visits),
                   one("low_comparisons", &QueryStats::low_comparisons),
                   one("inner_tree_visits", &QueryStats::inner_tree_visits),
                   one("inner_low_comparisons", &QueryStats::inner_low_comparisons)};
    return j;
}

}  // namespace sfid
