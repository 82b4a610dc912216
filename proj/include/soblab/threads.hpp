#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace soblab {

// Worker count: SOBOLEV_LAB_THREADS caps it, 0 or unset means auto.
inline int worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("SOBOLEV_LAB_THREADS")) {
        long cap = std::strtol(env, nullptr, 10);
        if (cap > 0) return static_cast<int>(std::min<long>(cap, hw));
    }
    return static_cast<int>(hw);
}

// Runs fn(chunk_index) for chunk_index in [0, nchunks). Chunking is fixed by
// the caller, so results are independent of the worker count; reductions over
// per-chunk outputs stay deterministic.
inline void parallel_for_chunks(int nchunks, const std::function<void(int)>& fn) {
    int workers = std::min(worker_count(), nchunks);
    if (workers <= 1) {
        for (int i = 0; i < nchunks; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int i = w; i < nchunks; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace soblab
