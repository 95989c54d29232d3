#pragma once

#include <dfk/algebra/plan.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace dfk::planner {

using algebra::PlanRef;

struct ColumnFlags {
    bool sorted = false;
    bool clustered = false;

    [[nodiscard]] auto any() const -> bool { return sorted || clustered; }
};

/// Column flags by label.
using ColumnStats = std::map<std::string, ColumnFlags>;

/// Metadata the rewriter may rely on. `known` seeds flags for subplans by
/// hash (scans, materialized bindings); the rest is derived structurally.
/// Flags are only ever set when they provably hold.
struct PlanStats {
    std::unordered_map<std::uint64_t, ColumnStats> known;

    [[nodiscard]] auto flags(const PlanRef& node) const -> ColumnStats;
    void mark(const PlanRef& node, const std::string& column, ColumnFlags flags);
};

/// Flags observed on concrete data: a column is clustered when equal raw
/// values form contiguous runs, sorted when its typed values never decrease.
auto observe(const Dataframe& df) -> ColumnStats;

/// Orders commutative parameters (and/or operands, join pairs). Idempotent.
auto canonicalize(const PlanRef& plan) -> PlanRef;

/// Hash-consing: structurally equal subplans become one node.
auto share_common(const PlanRef& plan, std::size_t* merged = nullptr) -> PlanRef;

struct RewriteOptions {
    bool r1 = true;
    bool r2 = true;
    bool r3 = true;
    bool r4 = true;
    bool r5 = true;
    bool r6 = true;
    bool r7 = true;
    /// Replace pivot macros by their expansion.
    bool expand_pivots = true;
};

struct RewriteResult {
    PlanRef plan;
    /// One entry per firing, e.g. "R1 transpose-elimination".
    std::vector<std::string> fired;
    std::size_t iterations = 0;
};

/// Applies the rules to a fixpoint (at most 32 passes). Fenced subplans other
/// than the root are left untouched.
auto rewrite(const PlanRef& plan, const PlanStats& stats = {}, const RewriteOptions& opts = {}) -> RewriteResult;

/// Wraps every operator output in an implicit Induce node, the shape an
/// eager system would evaluate.
auto insert_eager_induction(const PlanRef& plan) -> PlanRef;

/// Before/after listing with the fired rules.
auto explain(const PlanRef& plan, const PlanStats& stats = {}, const RewriteOptions& opts = {}) -> std::string;

}  // namespace dfk::planner
