#pragma once

#include <cstdint>
#include <filesystem>

namespace worldgen::sample
{
    inline constexpr std::uint64_t default_seed = 20240917;

    /// Elevation of the synthetic landscape in meters (2000 m x 1000 m, origin at 0,0).
    double terrain_height(double x, double y) noexcept;

    /// Writes a small synthetic dataset covering every input kind plus config.json into `dir` and
    /// returns the config path. Same seed, same bytes.
    std::filesystem::path write_sample_dataset(const std::filesystem::path& dir, std::uint64_t seed = default_seed);
} // namespace worldgen::sample
