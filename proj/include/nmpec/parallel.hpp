// parallel.hpp — deterministic chunked work distribution.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nmpec {

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs fn(chunk) for chunk = 0..chunks-1 on up to `threads` workers. Each
/// chunk writes only to its own output slot, so results do not depend on the
/// worker count. The first exception is rethrown after all workers stop.
template <class Fn>
void parallel_chunks(std::size_t chunks, unsigned threads, Fn&& fn) {
    threads = std::max(1u, std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(chunks, 1))));
    if (threads == 1) {
        for (std::size_t c = 0; c < chunks; ++c) fn(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks || failed.load()) return;
            try {
                fn(c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Pairwise reduction in index order: combine(a, b) folds b into a.
template <class T, class Combine>
T pairwise_reduce(std::vector<T> items, Combine&& combine) {
    if (items.empty()) return T{};
    for (std::size_t width = 1; width < items.size(); width *= 2)
        for (std::size_t i = 0; i + width < items.size(); i += 2 * width) combine(items[i], items[i + width]);
    return std::move(items.front());
}

}  // namespace nmpec
