#include <dfk/engine/thread_pool.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <memory>

namespace dfk::engine {

ThreadPool::ThreadPool(std::size_t threads) {
    for (std::size_t i = 1; i < threads; ++i) {
        workers_.emplace_back([this] { work(); });
    }
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) {
        t.join();
    }
}

void ThreadPool::work() {
    while (true) {
        std::function<void()> task;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
            if (queue_.empty()) {
                return;
            }
            task = std::move(queue_.front());
            queue_.pop_front();
        }
        task();
    }
}

void ThreadPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) {
        return;
    }
    if (workers_.empty() || n == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    struct Shared {
        std::atomic<std::size_t> next{0};
        std::size_t done = 0;
        std::vector<std::exception_ptr> errors;
        std::mutex m;
        std::condition_variable cv;
    };
    auto shared = std::make_shared<Shared>();
    shared->errors.resize(n);
    auto drain = [shared, n, &fn] {
        std::size_t finished = 0;
        for (std::size_t i = shared->next++; i < n; i = shared->next++) {
            try {
                fn(i);
            } catch (...) {
                shared->errors[i] = std::current_exception();
            }
            ++finished;
        }
        if (finished > 0) {
            std::lock_guard lock(shared->m);
            shared->done += finished;
            if (shared->done == n) {
                shared->cv.notify_all();
            }
        }
    };
    const std::size_t helpers = std::min(workers_.size(), n - 1);
    {
        std::lock_guard lock(mutex_);
        for (std::size_t h = 0; h < helpers; ++h) {
            queue_.emplace_back(drain);
        }
    }
    cv_.notify_all();
    drain();
    {
        std::unique_lock lock(shared->m);
        shared->cv.wait(lock, [&] { return shared->done == n; });
    }
    for (auto& e : shared->errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace dfk::engine
