#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace worldgen
{
    /// Worker count used by row/tile fan-out. 0 restores the default (hardware concurrency).
    void set_thread_count(unsigned count) noexcept;
    unsigned thread_count() noexcept;

    /// Calls body(i) for every i in [0, n). Work is split into contiguous chunks; each index is visited
    /// exactly once, so results are independent of the thread count when body(i) only writes slot i.
    template <typename Body>
    void parallel_for(std::size_t n, Body&& body)
    {
        const std::size_t workers = std::min<std::size_t>(thread_count(), n);
        if (workers <= 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                body(i);
            return;
        }
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w)
        {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end)
                break;
            pool.emplace_back([begin, end, &body] {
                for (std::size_t i = begin; i < end; ++i)
                    body(i);
            });
        }
    }
} // namespace worldgen
