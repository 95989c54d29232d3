#pragma once

#include <dfk/core/op_kind.hpp>

#include <array>
#include <atomic>
#include <cstdint>
#include <string>

namespace dfk {

/// Point-in-time copy of the process-wide instrumentation counters.
struct EngineStats {
    std::uint64_t cells_copied = 0;
    std::uint64_t cross_block_moves = 0;
    std::uint64_t s_invocations = 0;
    std::uint64_t cells_scanned = 0;
    std::uint64_t partitions_evaluated = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t label_index_builds = 0;
    std::array<std::uint64_t, kOpKindCount> kernel_executions{};

    [[nodiscard]] auto kernels(OpKind kind) const -> std::uint64_t {
        return kernel_executions[static_cast<std::size_t>(kind)];
    }

    /// Flat `key=value` block, one counter per line, keys sorted.
    [[nodiscard]] auto dump() const -> std::string;
};

/// Monotone atomic counters shared by every module. Tests reset them
/// between cases; nothing else ever decrements them.
class Counters {
public:
    std::atomic<std::uint64_t> cells_copied{0};
    std::atomic<std::uint64_t> cross_block_moves{0};
    std::atomic<std::uint64_t> s_invocations{0};
    std::atomic<std::uint64_t> cells_scanned{0};
    std::atomic<std::uint64_t> partitions_evaluated{0};
    std::atomic<std::uint64_t> cache_hits{0};
    std::atomic<std::uint64_t> cache_misses{0};
    std::atomic<std::uint64_t> label_index_builds{0};
    std::array<std::atomic<std::uint64_t>, kOpKindCount> kernel_executions{};

    void count_kernel(OpKind kind) {
        kernel_executions[static_cast<std::size_t>(kind)].fetch_add(1, std::memory_order_relaxed);
    }

    [[nodiscard]] auto snapshot() const -> EngineStats;
    void reset();
};

auto counters() -> Counters&;

}  // namespace dfk
