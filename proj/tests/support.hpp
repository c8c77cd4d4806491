#pragma once

#include "worldgen/geometry.hpp"
#include "worldgen/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing
{
    /// Seeded generator for property tests.
    class Gen
    {
    public:
        explicit Gen(std::uint64_t seed): engine_(seed) {}

        double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
        std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_); }
        std::uint32_t bits32() { return static_cast<std::uint32_t>(engine_()); }
        std::uint64_t bits64() { return engine_(); }

    private:
        std::mt19937_64 engine_;
    };

    /// Star-shaped simple polygon: sorted angles, random radii, counterclockwise.
    inline worldgen::Ring random_star_polygon(Gen& g, std::size_t n, worldgen::Vec2 center, double r_min, double r_max)
    {
        worldgen::Ring ring;
        for (std::size_t k = 0; k < n; ++k)
        {
            // Keep angular gaps away from zero so no two vertices nearly coincide.
            const double a = 2.0 * 3.141592653589793 * (static_cast<double>(k) + 0.3 + 0.4 * g.uniform()) / static_cast<double>(n);
            const double r = g.uniform(r_min, r_max);
            ring.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
        }
        return ring;
    }

    /// Histogram-shaped rectilinear polygon (many reflex corners and aligned non-adjacent vertices),
    /// rotated by `angle` and moved to `offset`. Counterclockwise.
    inline worldgen::Ring random_histogram_polygon(Gen& g, std::size_t columns, double angle, worldgen::Vec2 offset)
    {
        std::vector<double> xs {0.0};
        for (std::size_t k = 0; k < columns; ++k)
            xs.push_back(xs.back() + g.uniform(1.0, 6.0));
        std::vector<double> hs;
        for (std::size_t k = 0; k < columns; ++k)
            hs.push_back(g.uniform() < 0.2 && !hs.empty() ? hs.back() : g.uniform(1.0, 8.0));
        worldgen::Ring local {{xs.front(), 0.0}, {xs.back(), 0.0}};
        for (std::size_t k = columns; k-- > 0;)
        {
            local.push_back({xs[k + 1], hs[k]});
            local.push_back({xs[k], hs[k]});
        }
        worldgen::Ring ring;
        const double c = std::cos(angle), s = std::sin(angle);
        for (const auto& p: local)
            ring.push_back({offset.x + c * p.x - s * p.y, offset.y + s * p.x + c * p.y});
        return ring;
    }

    /// Shoelace area, independent of the library's signed_area.
    inline double shoelace(const worldgen::Ring& ring)
    {
        if (ring.empty())
            return 0.0;
        // Coordinates relative to the first vertex keep the products small.
        const worldgen::Vec2 o = ring.front();
        double s = 0.0;
        for (std::size_t i = 0; i < ring.size(); ++i)
        {
            const worldgen::Vec2 a {ring[i].x - o.x, ring[i].y - o.y};
            const worldgen::Vec2 b {ring[(i + 1) % ring.size()].x - o.x, ring[(i + 1) % ring.size()].y - o.y};
            s += a.x * b.y - b.x * a.y;
        }
        return 0.5 * s;
    }

    /// Winding-number containment, independent of the crossing-parity implementation.
    inline int winding_number(const worldgen::Ring& ring, worldgen::Vec2 p)
    {
        int wn = 0;
        for (std::size_t i = 0; i < ring.size(); ++i)
        {
            const auto& a = ring[i];
            const auto& b = ring[(i + 1) % ring.size()];
            const double side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
            if (a.y <= p.y)
            {
                if (b.y > p.y && side > 0)
                    ++wn;
            }
            else if (b.y <= p.y && side < 0)
                --wn;
        }
        return wn;
    }

    /// Fresh empty directory under the system temp path.
    inline std::filesystem::path scratch_dir(const std::string& name)
    {
        const auto dir = std::filesystem::temp_directory_path() / ("worldgen_test_" + name);
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        return dir;
    }
} // namespace testing
