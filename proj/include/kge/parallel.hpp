#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace kge {

inline unsigned default_thread_count() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

// Runs fn(i) for i in [0, n) split into contiguous blocks across `threads`
// workers. Callers are responsible for making fn(i) free of data races;
// the usual pattern here is writing to preallocated per-index slots, which
// keeps results independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (threads > n) threads = static_cast<unsigned>(n);

    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    std::vector<std::exception_ptr> errors(threads);

    const std::size_t block = (n + threads - 1) / threads;
    auto run_block = [&](unsigned t) {
        const std::size_t begin = static_cast<std::size_t>(t) * block;
        const std::size_t end = begin + block < n ? begin + block : n;
        try {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
            errors[t] = std::current_exception();
        }
    };

    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(run_block, t);
    run_block(0);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace kge
