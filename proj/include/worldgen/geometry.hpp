#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace worldgen
{
    struct Vec2
    {
        double x {};
        double y {};

        friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
        friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
        friend constexpr Vec2 operator*(Vec2 a, double s) noexcept { return {a.x * s, a.y * s}; }
        friend constexpr bool operator==(Vec2, Vec2) noexcept = default;
    };

    constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
    constexpr double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }

    struct Vec3
    {
        double x {};
        double y {};
        double z {};

        friend constexpr Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
        friend constexpr Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
        friend constexpr Vec3 operator-(Vec3 a) noexcept { return {-a.x, -a.y, -a.z}; }
        friend constexpr Vec3 operator*(Vec3 a, double s) noexcept { return {a.x * s, a.y * s, a.z * s}; }
        friend constexpr Vec3 operator*(double s, Vec3 a) noexcept { return a * s; }
        friend constexpr bool operator==(Vec3, Vec3) noexcept = default;
    };

    constexpr double dot(Vec3 a, Vec3 b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
    constexpr Vec3 cross(Vec3 a, Vec3 b) noexcept
    {
        return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
    }
    inline double norm(Vec3 a) noexcept { return std::sqrt(dot(a, a)); }
    inline Vec3 normalized(Vec3 a) noexcept { return a * (1.0 / norm(a)); }

    /// Single-precision point, the storage type of streamline coordinates.
    struct Vec3f
    {
        float x {};
        float y {};
        float z {};

        friend constexpr bool operator==(Vec3f, Vec3f) noexcept = default;
    };

    constexpr Vec3 to_double(Vec3f p) noexcept { return {p.x, p.y, p.z}; }

    struct Box2
    {
        Vec2 min {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        Vec2 max {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

        void extend(Vec2 p) noexcept
        {
            min.x = std::min(min.x, p.x);
            min.y = std::min(min.y, p.y);
            max.x = std::max(max.x, p.x);
            max.y = std::max(max.y, p.y);
        }

        bool empty() const noexcept { return min.x > max.x || min.y > max.y; }
    };

    /// Rings are stored open: the closing vertex is not repeated.
    using Ring = std::vector<Vec2>;

    Box2 bounds(std::span<const Vec2> points) noexcept;

    /// Shoelace area of an open ring; positive for counterclockwise orientation.
    double signed_area(std::span<const Vec2> ring) noexcept;

    /// Crossing-number test of one ring. Returns true when a ray towards +x crosses an odd number of edges.
    bool ring_contains(std::span<const Vec2> ring, Vec2 p) noexcept;

    /// Even-odd rule over all rings of a polygon (exterior and holes alike).
    bool polygon_contains(std::span<const Ring> rings, Vec2 p) noexcept;

    /// True when the closed segments [a,b] and [c,d] share at least one point.
    bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) noexcept;

    /// O(n^2) check that no two non-adjacent edges of an open ring touch and adjacent edges do not overlap.
    bool ring_is_simple(std::span<const Vec2> ring) noexcept;

    double point_segment_distance_sq(Vec2 p, Vec2 a, Vec2 b) noexcept;
} // namespace worldgen
