#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dfk::engine {

/// Fixed pool. `parallel_for` may be called from several threads at once;
/// the calling thread always takes part, so a pool of size 1 runs inline.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t threads);
    ~ThreadPool();
    ThreadPool(const ThreadPool&) = delete;
    auto operator=(const ThreadPool&) -> ThreadPool& = delete;

    [[nodiscard]] auto size() const -> std::size_t { return workers_.size() + 1; }

    /// Runs fn(0..n-1). If any calls throw, the exception of the lowest
    /// index is rethrown after all calls finished.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

private:
    void work();

    std::vector<std::thread> workers_;
    std::deque<std::function<void()>> queue_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stop_ = false;
};

}  // namespace dfk::engine
