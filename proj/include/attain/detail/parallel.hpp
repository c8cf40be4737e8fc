#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace attain::detail {

/// Runs fn(i) for i in [0, count). jobs <= 1 stays on the calling thread.
/// Results must be written to index-addressed storage by the callers, so the
/// outcome is independent of scheduling. The first exception wins and is
/// rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    if (count == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(count, jobs > 1 ? static_cast<std::size_t>(jobs) : 1);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace attain::detail
