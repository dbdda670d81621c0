#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace swmem {

/// Work is cut into fixed-size chunks; chunk boundaries and per-chunk RNG
/// streams never depend on the thread count, and partial results are reduced
/// in chunk order, so every result is bit-identical for any `threads`.
struct Execution {
    unsigned threads = 1; ///< 0 selects std::thread::hardware_concurrency()

    unsigned resolved_threads() const
    {
        if (threads != 0)
            return threads;
        return std::max(1u, std::thread::hardware_concurrency());
    }
};

inline constexpr std::size_t kChunkSize = 4096;

inline std::size_t chunk_count(std::size_t n) { return (n + kChunkSize - 1) / kChunkSize; }

/// Calls fn(chunk) for chunk in [0, n_chunks), round-robin over the threads.
template <class Fn>
void for_each_chunk(std::size_t n_chunks, const Execution& exec, Fn&& fn)
{
    const std::size_t n_threads = std::min<std::size_t>(exec.resolved_threads(), n_chunks);
    if (n_threads <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            workers.emplace_back([&, t] {
                try {
                    for (std::size_t c = t; c < n_chunks; c += n_threads)
                        fn(c);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            });
        }
    }
    if (failure)
        std::rethrow_exception(failure);
}

/// Map every chunk to a partial value, then fold them left to right.
template <class T, class Map, class Fold>
T chunked_reduce(std::size_t n, const Execution& exec, T init, Map&& map, Fold&& fold)
{
    const std::size_t n_chunks = chunk_count(n);
    std::vector<T> partial(n_chunks, init);
    for_each_chunk(n_chunks, exec, [&](std::size_t c) {
        const std::size_t begin = c * kChunkSize;
        const std::size_t len = std::min(kChunkSize, n - begin);
        partial[c] = map(begin, len);
    });
    T acc = init;
    for (const T& p : partial)
        acc = fold(acc, p);
    return acc;
}

/// Independent engine for one (seed, stream, index) triple.
inline std::mt19937_64 derived_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

} // namespace swmem
