#include "worldgen/parallel.hpp"

#include <atomic>

namespace worldgen
{
    namespace
    {
        std::atomic<unsigned> configured_threads {0};
    }

    void set_thread_count(unsigned count) noexcept { configured_threads.store(count); }

    unsigned thread_count() noexcept
    {
        const unsigned n = configured_threads.load();
        if (n != 0)
            return n;
        return std::max(1u, std::thread::hardware_concurrency());
    }
} // namespace worldgen
