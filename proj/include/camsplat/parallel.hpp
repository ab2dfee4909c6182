// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace camsplat {

// Static-partition parallel loop. f(i) is called exactly once for every
// i in [0, n); with threads <= 1 this degenerates to a plain serial loop.
// Callers that need reproducible floating-point results write into
// per-index slots and reduce sequentially afterwards.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    if (n == 0) {
        return;
    }
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            f(i);
        }
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto run_range = [&](std::size_t begin, std::size_t end) {
        try {
            for (std::size_t i = begin; i < end; ++i) {
                f(i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) {
                first_error = std::current_exception();
            }
        }
    };

    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 1; w < workers; ++w) {
        const std::size_t begin = static_cast<std::size_t>(w) * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end) {
            pool.emplace_back(run_range, begin, end);
        }
    }
    run_range(0, std::min(n, chunk));
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace camsplat
