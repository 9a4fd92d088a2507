#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace emseg {

/// Worker count: hardware concurrency, capped by the EMSEG_THREADS environment variable.
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Each index is handled by exactly one thread, so
/// results written per index do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& body) {
    const std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w * n / workers; i < (w + 1) * n / workers; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace emseg
