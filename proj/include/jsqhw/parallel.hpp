#pragma once

// Minimal deterministic worker pool: jobs are indexed 0..n-1, each job writes
// only its own result slot, and callers consume results in index order.
// Together with per-index derived RNG seeds this makes parallel runs produce
// byte-identical output regardless of scheduling (and of the worker count).

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace jsqhw {

template <typename Fn>
void parallel_for_indexed(std::size_t n_jobs, int workers, Fn&& fn) {
    if (workers <= 1 || n_jobs <= 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) fn(i);
        return;
    }
    const auto n_threads = static_cast<std::size_t>(workers) < n_jobs
                               ? static_cast<std::size_t>(workers)
                               : n_jobs;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n_jobs) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace jsqhw
