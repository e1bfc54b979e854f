#pragma once

#include <atomic>
#include <thread>
#include <vector>

namespace parisi {

// Index-parallel loop; results must be written to per-index storage so the
// outcome is independent of scheduling.
template <class F>
void parallel_for(int n, int threads, F&& f) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    int workers = std::min(threads, n);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace parisi
