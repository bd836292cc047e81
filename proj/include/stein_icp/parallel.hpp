#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace stein_icp {

/// Fixed worker pool running blocking parallel-for loops.
///
/// Work items are split into contiguous chunks, one per worker. Results must not depend
/// on which worker ran an item; callers give each item its own state and RNG stream.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t threads = 1);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t threads() const { return workers_.size() + 1; }

    /// Runs body(i) for i in [0, n). Rethrows the first exception raised by any item.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

private:
    void worker_loop(std::size_t slot);
    void run_chunk(std::size_t slot);

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t)>* body_ = nullptr;
    std::size_t count_ = 0;
    std::size_t generation_ = 0;
    std::size_t pending_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
};

/// Thread count from --threads, else STEIN_ICP_THREADS, else hardware concurrency.
std::size_t resolve_thread_count(std::size_t requested);

}  // namespace stein_icp
