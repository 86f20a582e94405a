#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace ergolab {

/// Worker count: ERGOLAB_THREADS when set (>= 1), else the hardware count.
inline unsigned thread_count() {
    if (const char* env = std::getenv("ERGOLAB_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n >= 1) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count). Each call must only touch state owned by
/// index i; callers merge afterwards in index order.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned threads = thread_count()) {
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
}

/// Smallest i in [0, count) with pred(i) true. The answer does not depend on
/// the number of threads: chunks are scanned in order and the minimum wins.
template <class Pred>
std::optional<std::size_t> parallel_find_first(std::size_t count, Pred&& pred, unsigned threads = thread_count()) {
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            if (pred(i)) return i;
        return std::nullopt;
    }
    const std::size_t chunk = std::max<std::size_t>(threads * 4, 16);
    for (std::size_t base = 0; base < count; base += chunk) {
        const std::size_t len = std::min(chunk, count - base);
        std::vector<char> hit(len, 0);
        parallel_for(len, [&](std::size_t i) { hit[i] = pred(base + i) ? 1 : 0; }, threads);
        for (std::size_t i = 0; i < len; ++i)
            if (hit[i]) return base + i;
    }
    return std::nullopt;
}

} // namespace ergolab
