#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace sepsis {

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; every
// iteration writes only to its own output slot, so results are independent of
// the thread count.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    size_t workers = std::min<size_t>(static_cast<size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    size_t chunk = (n + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
        size_t lo = w * chunk;
        size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace sepsis
