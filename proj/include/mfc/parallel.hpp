#pragma once

// Deterministic chunked parallel-for.
//
// Work is split into contiguous chunks whose boundaries depend only on the
// item count — never on the worker count — and every chunk writes results
// into its own slot.  Merging slot results in chunk order therefore gives
// output that is bitwise independent of scheduling and worker count; all
// randomness flows through per-item substreams (see rng.hpp).

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace mfc {

/** Effective worker count: explicit request, else MFC_WORKERS, else
 *  hardware concurrency (at least 1). */
inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MFC_WORKERS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<int>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/** Runs fn(chunk_index, begin, end) over [0, total) split into n_chunks
 *  contiguous ranges.  Exceptions from workers are rethrown (first one). */
template <typename Fn>
inline void parallel_chunks(std::size_t total, std::size_t n_chunks, int workers, Fn&& fn) {
    if (total == 0) return;
    if (n_chunks == 0) n_chunks = 1;
    if (n_chunks > total) n_chunks = total;
    auto chunk_bounds = [total, n_chunks](std::size_t c) {
        // Even split: the first (total % n_chunks) chunks get one extra item.
        std::size_t base = total / n_chunks, extra = total % n_chunks;
        std::size_t begin = c * base + std::min(c, extra);
        std::size_t end = begin + base + (c < extra ? 1 : 0);
        return std::pair<std::size_t, std::size_t>(begin, end);
    };

    int n_workers = std::min<std::size_t>(std::max(workers, 1), n_chunks);
    if (n_workers == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            auto [b, e] = chunk_bounds(c);
            fn(c, b, e);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= n_chunks || failed.load()) return;
            try {
                auto [b, e] = chunk_bounds(c);
                fn(c, b, e);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

} // namespace mfc
