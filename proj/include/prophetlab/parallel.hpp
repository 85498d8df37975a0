#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace prophetlab {

// Runs body(c) for c in [0, count) on up to `jobs` threads. The first exception, by index, is
// rethrown once every task has finished.
template <class Body>
void parallel_for(std::size_t count, int jobs, Body&& body) {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    const auto worker = [&] {
        for (std::size_t c = next++; c < count; c = next++) {
            try {
                body(c);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        }
    };
    const auto extra = static_cast<std::size_t>(std::max(1, jobs)) - 1;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(extra, count); ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace prophetlab
