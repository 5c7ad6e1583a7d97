#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace levytame {

/// Contiguous split of [0, items) into `batches` ranges.
struct BatchRange {
    std::size_t index;
    std::size_t begin;
    std::size_t end;
};

inline std::vector<BatchRange> split_batches(std::size_t items, std::size_t batches) {
    batches = std::max<std::size_t>(1, std::min(batches, items));
    std::vector<BatchRange> out;
    out.reserve(batches);
    for (std::size_t b = 0; b < batches; ++b) out.push_back({b, b * items / batches, (b + 1) * items / batches});
    return out;
}

/// Evaluates fn(range) for every batch on a pool of `workers` threads and returns the results in
/// batch order. Each batch runs sequentially on one thread, so results never depend on the pool size.
template <class Fn>
auto run_batches(std::size_t items, std::size_t batches, unsigned workers, Fn&& fn) {
    using Acc = decltype(fn(BatchRange{}));
    const auto ranges = split_batches(items, batches);
    std::vector<Acc> results(ranges.size());
    if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, ranges.size()));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= ranges.size()) return;
            try {
                results[b] = fn(ranges[b]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(ranges.size());
                return;
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

}  // namespace levytame
