#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tandim {

/// Worker count from TANDIM_WORKERS; 1 when unset or invalid.
inline unsigned worker_count() {
    const char* env = std::getenv("TANDIM_WORKERS");
    if (!env) return 1;
    try {
        const long v = std::stol(env);
        if (v >= 1) return static_cast<unsigned>(std::min<long>(v, 256));
    } catch (...) {
    }
    return 1;
}

/// Runs f(i) for i in [0, n). Results must be written to per-index slots so
/// that output does not depend on scheduling. The first exception (lowest
/// index) is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f, unsigned workers = worker_count()) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t err_index = n;
    std::exception_ptr err;
    auto run = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard lk(mu);
                if (i < err_index) err_index = i, err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    for (unsigned k = 0; k < w; ++k) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace tandim
