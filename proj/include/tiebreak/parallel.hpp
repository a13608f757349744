#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace tiebreak {

// Thread cap: TIEBREAK_THREADS if set, otherwise the machine default.
inline int max_threads() {
    if (const char* env = std::getenv("TIEBREAK_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(begin, end) over contiguous chunks of [0, count).
inline void parallel_for(int count, const std::function<void(int, int)>& fn) {
    const int threads = std::min(max_threads(), std::max(count, 1));
    if (threads <= 1 || count <= 1) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const int chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int begin = t * chunk;
        const int end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(fn, begin, end);
    }
    for (auto& th : pool) th.join();
}

}  // namespace tiebreak
