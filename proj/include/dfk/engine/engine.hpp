#pragma once

#include <dfk/algebra/plan.hpp>
#include <dfk/core/dataframe.hpp>
#include <dfk/engine/cache.hpp>
#include <dfk/engine/thread_pool.hpp>
#include <dfk/planner/planner.hpp>

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>

namespace dfk::engine {

enum class Mode { Eager, Lazy, Opportunistic };

auto to_string(Mode mode) -> std::string_view;
auto mode_from_string(std::string_view name) -> std::optional<Mode>;

struct EngineConfig {
    Mode mode = Mode::Opportunistic;
    std::size_t threads = 1;
    std::size_t cache_bytes = std::size_t{256} << 20;
    BlockShape block_shape{};
    /// Every union requires identical column labels.
    bool strict_union = false;
    bool rewrite = true;
};

enum class HandleStatus { Pending, Running, Partial, Complete, Failed };

auto to_string(HandleStatus status) -> std::string_view;

class Engine;
struct HandleState;

/// Reference to the eventual result of a submitted plan. Cheap to copy;
/// every observation goes through the owning Engine.
class Handle {
public:
    Handle() = default;

    [[nodiscard]] auto status() const -> HandleStatus;
    [[nodiscard]] auto plan() const -> const algebra::PlanRef&;
    [[nodiscard]] auto rewritten() const -> const algebra::PlanRef&;
    [[nodiscard]] auto fired_rules() const -> const std::vector<std::string>&;
    [[nodiscard]] auto valid() const -> bool { return state_ != nullptr; }

private:
    friend class Engine;
    explicit Handle(std::shared_ptr<HandleState> s) : state_(std::move(s)) {}
    std::shared_ptr<HandleState> state_;
};

/// Executes plans over block-partitioned frames. Results equal the
/// reference evaluator's cell for cell in every mode and thread count.
class Engine {
public:
    explicit Engine(EngineConfig config = {});
    ~Engine();
    Engine(const Engine&) = delete;
    auto operator=(const Engine&) -> Engine& = delete;

    /// Rewrites and registers a plan. Structurally equal roots share one
    /// handle. Eager mode evaluates before returning (and rethrows errors);
    /// opportunistic mode queues background work; lazy mode does nothing.
    auto submit(const algebra::PlanRef& plan) -> Handle;

    auto collect(const Handle& handle) -> Dataframe;
    auto head(const Handle& handle, std::size_t k) -> Dataframe;
    auto tail(const Handle& handle, std::size_t k) -> Dataframe;
    /// Display of the first and last k rows, computing as little as the
    /// plan allows.
    auto render(const Handle& handle, std::size_t k = 5) -> std::string;

    /// submit + collect.
    auto execute(const algebra::PlanRef& plan) -> Dataframe;

    /// Planner statistics for a plan: flags of in-memory scans and of
    /// materialized bindings.
    auto stats_for(const algebra::PlanRef& plan) -> planner::PlanStats;
    auto explain(const algebra::PlanRef& plan) -> std::string;

    /// Blocks until the background queue is empty (opportunistic mode).
    void wait_idle();

    [[nodiscard]] auto config() const -> const EngineConfig& { return config_; }
    auto cache() -> MaterializationCache& { return cache_; }
    auto pool() -> ThreadPool& { return pool_; }

    /// Handle registered for a root plan hash, if any.
    auto find(const algebra::PlanRef& plan) -> std::optional<Handle>;

private:
    friend class Run;

    void background();
    void run_to_completion(const std::shared_ptr<HandleState>& state);
    auto resolve_binding(const algebra::PlanRef& node) -> std::optional<Dataframe>;
    auto induce_cached(const Dataframe& df, const std::vector<std::size_t>& cols) -> Dataframe;

    EngineConfig config_;
    ThreadPool pool_;
    MaterializationCache cache_;

    std::mutex registry_mutex_;
    std::unordered_multimap<std::uint64_t, std::shared_ptr<HandleState>> registry_;
    std::unordered_map<std::uint64_t, planner::ColumnStats> observed_;

    struct SchemaEntry {
        Dataframe keepalive;
        std::vector<std::optional<Domain>> domains;
    };
    std::mutex schema_mutex_;
    std::unordered_map<const void*, SchemaEntry> schema_cache_;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::condition_variable idle_cv_;
    std::deque<std::shared_ptr<HandleState>> queue_;
    bool busy_ = false;
    bool stop_ = false;
    std::thread worker_;
};

}  // namespace dfk::engine
