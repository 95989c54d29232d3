#include <dfk/engine/cache.hpp>

#include <dfk/core/counters.hpp>

#include <algorithm>

namespace dfk::engine {

auto MaterializationCache::find(const algebra::PlanRef& plan) const -> const Entry* {
    auto [lo, hi] = entries_.equal_range(plan->hash);
    for (auto it = lo; it != hi; ++it) {
        if (algebra::structurally_equal(it->second.plan, plan)) {
            return &it->second;
        }
    }
    return nullptr;
}

auto MaterializationCache::lookup(const algebra::PlanRef& plan) -> std::optional<Dataframe> {
    std::lock_guard lock(mutex_);
    if (const Entry* e = find(plan)) {
        const_cast<Entry*>(e)->reuse++;
        counters().cache_hits.fetch_add(1, std::memory_order_relaxed);
        return e->frame;
    }
    counters().cache_misses.fetch_add(1, std::memory_order_relaxed);
    return std::nullopt;
}

auto MaterializationCache::store(const algebra::PlanRef& plan, const Dataframe& frame, std::uint64_t cost) -> bool {
    return store_sized(plan, frame, cost, frame.approx_bytes());
}

auto MaterializationCache::store_sized(const algebra::PlanRef& plan, const Dataframe& frame, std::uint64_t cost,
                                       std::size_t bytes) -> bool {
    std::lock_guard lock(mutex_);
    if (find(plan) != nullptr) {
        return true;
    }
    if (bytes > budget_) {
        return false;
    }
    Entry incoming{plan, frame, bytes, cost, 0};
    std::vector<std::unordered_multimap<std::uint64_t, Entry>::iterator> order;
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        order.push_back(it);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a->second.density() < b->second.density(); });
    std::size_t freed = 0;
    std::size_t victims = 0;
    while (used_ - freed + bytes > budget_) {
        if (victims == order.size() || order[victims]->second.density() >= incoming.density()) {
            return false;
        }
        freed += order[victims++]->second.bytes;
    }
    for (std::size_t v = 0; v < victims; ++v) {
        entries_.erase(order[v]);
    }
    used_ -= freed;
    used_ += bytes;
    entries_.emplace(plan->hash, std::move(incoming));
    return true;
}

auto MaterializationCache::contains(const algebra::PlanRef& plan) const -> bool {
    std::lock_guard lock(mutex_);
    return find(plan) != nullptr;
}

auto MaterializationCache::bytes() const -> std::size_t {
    std::lock_guard lock(mutex_);
    return used_;
}

auto MaterializationCache::entries() const -> std::size_t {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

auto MaterializationCache::cost_of(const algebra::PlanRef& plan) const -> std::optional<std::uint64_t> {
    std::lock_guard lock(mutex_);
    if (const Entry* e = find(plan)) {
        return e->cost;
    }
    return std::nullopt;
}

}  // namespace dfk::engine
