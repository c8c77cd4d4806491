#include "worldgen/geometry.hpp"

namespace worldgen
{
    Box2 bounds(std::span<const Vec2> points) noexcept
    {
        Box2 box;
        for (const Vec2& p: points)
            box.extend(p);
        return box;
    }

    double signed_area(std::span<const Vec2> ring) noexcept
    {
        const std::size_t n = ring.size();
        if (n < 3)
            return 0.0;
        // Shifted to the first vertex to keep the products small for projected coordinates.
        const Vec2 o = ring[0];
        double twice = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i)
            twice += cross(ring[i] - o, ring[i + 1] - o);
        return 0.5 * twice;
    }

    bool ring_contains(std::span<const Vec2> ring, Vec2 p) noexcept
    {
        bool inside = false;
        const std::size_t n = ring.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++)
        {
            const Vec2 a = ring[i];
            const Vec2 b = ring[j];
            if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
                inside = !inside;
        }
        return inside;
    }

    bool polygon_contains(std::span<const Ring> rings, Vec2 p) noexcept
    {
        bool inside = false;
        for (const Ring& r: rings)
            if (ring_contains(r, p))
                inside = !inside;
        return inside;
    }

    namespace
    {
        int orientation(Vec2 a, Vec2 b, Vec2 c) noexcept
        {
            const double v = cross(b - a, c - a);
            return (v > 0.0) - (v < 0.0);
        }

        bool on_segment(Vec2 a, Vec2 b, Vec2 p) noexcept
        {
            return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
                   p.y <= std::max(a.y, b.y);
        }
    } // namespace

    bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) noexcept
    {
        const int o1 = orientation(a, b, c);
        const int o2 = orientation(a, b, d);
        const int o3 = orientation(c, d, a);
        const int o4 = orientation(c, d, b);
        if (o1 != o2 && o3 != o4)
            return true;
        if (o1 == 0 && on_segment(a, b, c))
            return true;
        if (o2 == 0 && on_segment(a, b, d))
            return true;
        if (o3 == 0 && on_segment(c, d, a))
            return true;
        if (o4 == 0 && on_segment(c, d, b))
            return true;
        return false;
    }

    bool ring_is_simple(std::span<const Vec2> ring) noexcept
    {
        const std::size_t n = ring.size();
        if (n < 3)
            return false;
        for (std::size_t i = 0; i < n; ++i)
        {
            const Vec2 a = ring[i];
            const Vec2 b = ring[(i + 1) % n];
            if (a == b)
                return false;
            for (std::size_t j = i + 1; j < n; ++j)
            {
                const Vec2 c = ring[j];
                const Vec2 d = ring[(j + 1) % n];
                const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
                if (adjacent)
                {
                    // Adjacent edges share one vertex; they must not fold back onto each other.
                    const Vec2 shared = (j == i + 1) ? b : a;
                    const Vec2 p = (j == i + 1) ? a : b;
                    const Vec2 q = (j == i + 1) ? d : c;
                    if (orientation(shared, p, q) == 0 && dot(p - shared, q - shared) > 0.0)
                        return false;
                    continue;
                }
                if (segments_intersect(a, b, c, d))
                    return false;
            }
        }
        return true;
    }

    double point_segment_distance_sq(Vec2 p, Vec2 a, Vec2 b) noexcept
    {
        const Vec2 ab = b - a;
        const double len_sq = dot(ab, ab);
        double t = len_sq > 0.0 ? dot(p - a, ab) / len_sq : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const Vec2 d = p - (a + ab * t);
        return dot(d, d);
    }
} // namespace worldgen
