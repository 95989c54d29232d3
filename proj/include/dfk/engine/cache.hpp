#pragma once

#include <dfk/algebra/plan.hpp>
#include <dfk/core/dataframe.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

namespace dfk::engine {

/// Materialized subplan results keyed by plan hash (verified structurally).
/// `cost` is the work spent producing an entry, in deterministic units.
/// Entries with the lowest cost * (reuse + 1) / bytes go first when the
/// budget is exceeded.
class MaterializationCache {
public:
    explicit MaterializationCache(std::size_t budget_bytes) : budget_(budget_bytes) {}

    auto lookup(const algebra::PlanRef& plan) -> std::optional<Dataframe>;
    /// False when the entry does not fit, even after eviction.
    auto store(const algebra::PlanRef& plan, const Dataframe& frame, std::uint64_t cost) -> bool;

    /// Same, with an explicit size (tests).
    auto store_sized(const algebra::PlanRef& plan, const Dataframe& frame, std::uint64_t cost, std::size_t bytes)
        -> bool;

    [[nodiscard]] auto contains(const algebra::PlanRef& plan) const -> bool;
    [[nodiscard]] auto bytes() const -> std::size_t;
    [[nodiscard]] auto entries() const -> std::size_t;
    [[nodiscard]] auto budget() const -> std::size_t { return budget_; }
    /// Cost recorded for a cached plan, if present.
    [[nodiscard]] auto cost_of(const algebra::PlanRef& plan) const -> std::optional<std::uint64_t>;

private:
    struct Entry {
        algebra::PlanRef plan;
        Dataframe frame;
        std::size_t bytes = 0;
        std::uint64_t cost = 0;
        std::uint64_t reuse = 0;

        [[nodiscard]] auto density() const -> double {
            return static_cast<double>(cost) * static_cast<double>(reuse + 1) /
                   static_cast<double>(std::max<std::size_t>(bytes, 1));
        }
    };

    auto find(const algebra::PlanRef& plan) const -> const Entry*;

    std::size_t budget_;
    std::size_t used_ = 0;
    std::unordered_multimap<std::uint64_t, Entry> entries_;
    mutable std::mutex mutex_;
};

}  // namespace dfk::engine
