#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"

namespace ddsense {

// DDSENSE_THREADS, else hardware concurrency.
inline int default_threads() {
    if (const char* env = std::getenv("DDSENSE_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::logic_error&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n). Work is split in contiguous index ranges; if any
// call throws, the failure with the lowest index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 0) threads = default_threads();
    const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::exception_ptr> errors(n);
    auto run = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (t <= 1) {
        run(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + t - 1) / t;
        for (std::size_t w = 0; w < t; ++w) pool.emplace_back(run, w * chunk, std::min(n, (w + 1) * chunk));
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace ddsense
