#pragma once

#include <algorithm>
#include <cstdint>

namespace sfid {

// Per-query instrumentation. Each query owns its own instance; structures
// never hold one, so concurrent readers never share counters.
struct QueryStats {
    std::uint64_t pred_probes = 0;        // predecessor-structure cell reads
    std::uint64_t tree_visits = 0;        // aB-tree nodes decoded in the outer structure
    std::uint64_t low_comparisons = 0;    // low-part comparisons on the sorted-array path
    std::uint64_t inner_tree_visits = 0;  // aB-tree nodes decoded inside embedded FIDs
    std::uint64_t inner_low_comparisons = 0;
    std::uint64_t pred_peak = 0;  // most probes spent inside a single predecessor call

    QueryStats& operator+=(const QueryStats& o) {
        pred_peak = std::max(pred_peak, o.pred_peak);
        pred_probes += o.pred_probes;
        tree_visits += o.tree_visits;
        low_comparisons += o.low_comparisons;
        inner_tree_visits += o.inner_tree_visits;
        inner_low_comparisons += o.inner_low_comparisons;
        return *this;
    }

    std::uint64_t total() const {
        return pred_probes + tree_visits + low_comparisons + inner_tree_visits +
               inner_low_comparisons;
    }
};

// Aggregates max and sum of QueryStats over a workload.
struct StatsSummary {
    QueryStats max;
    QueryStats sum;
    std::uint64_t queries = 0;

    void add(const QueryStats& q) {
        max.pred_probes = std::max(max.pred_probes, q.pred_probes);
        max.tree_visits = std::max(max.tree_visits, q.tree_visits);
        max.low_comparisons = std::max(max.low_comparisons, q.low_comparisons);
        max.inner_tree_visits = std::max(max.inner_tree_visits, q.inner_tree_visits);
        max.inner_low_comparisons = std::max(max.inner_low_comparisons, q.inner_low_comparisons);
        max.pred_peak = std::max(max.pred_peak, q.pred_peak);
        sum += q;
        ++queries;
    }

    double mean(std::uint64_t QueryStats::*field) const {
        return queries == 0 ? 0.0 : static_cast<double>(sum.*field) / static_cast<double>(queries);
    }
};

}  // namespace sfid
