#include "worldgen/buildings.hpp"

#include "worldgen/error.hpp"
#include "worldgen/io.hpp"
#include "worldgen/raster.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace worldgen::buildings
{
    Ring prune_collinear(const Ring& ring, double area_tolerance)
    {
        Ring out;
        out.reserve(ring.size());
        for (const Vec2& p: ring)
            if (out.empty() || !(out.back() == p))
                out.push_back(p);
        while (out.size() > 1 && out.front() == out.back())
            out.pop_back();

        bool changed = true;
        while (changed && out.size() >= 3)
        {
            changed = false;
            for (std::size_t i = 0; i < out.size() && out.size() >= 3; ++i)
            {
                const Vec2 prev = out[(i + out.size() - 1) % out.size()];
                const Vec2 next = out[(i + 1) % out.size()];
                if (0.5 * std::abs(cross(out[i] - prev, next - prev)) < area_tolerance)
                {
                    out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
                    changed = true;
                    --i;
                }
            }
        }
        return out;
    }

    Footprint make_footprint(const Feature& feature)
    {
        if (feature.rings.empty())
            throw GeometryError(fmt::format("footprint '{}' has no rings", feature.feature_id));
        if (feature.rings.size() > 1)
            throw GeometryError(fmt::format("footprint '{}' has {} interior ring(s); only simple extrusion is supported",
                                            feature.feature_id, feature.rings.size() - 1));
        Ring ring = prune_collinear(feature.rings.front());
        if (ring.size() < 3)
            throw GeometryError(fmt::format("footprint '{}' is degenerate", feature.feature_id));
        if (!ring_is_simple(ring))
            throw GeometryError(fmt::format("footprint '{}' is self-intersecting", feature.feature_id));
        const double area = signed_area(ring);
        if (std::abs(area) <= collinear_area_tolerance)
            throw GeometryError(fmt::format("footprint '{}' has zero area", feature.feature_id));
        if (area < 0.0)
            std::reverse(ring.begin(), ring.end());
        return {std::move(ring), feature.feature_id};
    }

    namespace
    {
        /// Closed containment test; `slack` widens every edge by that much doubled area.
        bool in_triangle_closed(Vec2 a, Vec2 b, Vec2 c, Vec2 p, double slack) noexcept
        {
            return cross(b - a, p - a) >= -slack && cross(c - b, p - b) >= -slack && cross(a - c, p - c) >= -slack;
        }
    } // namespace

    std::vector<std::array<std::uint32_t, 3>> triangulate_ear_clipping(std::span<const Vec2> ring)
    {
        std::vector<std::array<std::uint32_t, 3>> triangles;
        if (ring.size() < 3)
            throw GeometryError("cannot triangulate a ring with fewer than 3 vertices");
        std::vector<std::uint32_t> remaining(ring.size());
        std::iota(remaining.begin(), remaining.end(), 0u);
        triangles.reserve(ring.size() - 2);

        while (remaining.size() > 3)
        {
            const std::size_t m = remaining.size();
            bool clipped = false;
            // Vertices lying almost on a candidate ear's edge block it first, so no sliver is left behind;
            // the exact test only runs when that finds no ear.
            for (const double slack: {2.0 * collinear_area_tolerance, 0.0})
            {
                for (std::size_t i = 0; i < m && !clipped; ++i)
                {
                    const std::uint32_t ip = remaining[(i + m - 1) % m];
                    const std::uint32_t ic = remaining[i];
                    const std::uint32_t in = remaining[(i + 1) % m];
                    const Vec2 a = ring[ip];
                    const Vec2 b = ring[ic];
                    const Vec2 c = ring[in];
                    if (0.5 * cross(b - a, c - a) <= collinear_area_tolerance)
                        continue; // reflex or flat
                    bool blocked = false;
                    for (const std::uint32_t k: remaining)
                    {
                        if (k == ip || k == ic || k == in)
                            continue;
                        const Vec2 p = ring[k];
                        if (p == a || p == b || p == c)
                            continue;
                        if (in_triangle_closed(a, b, c, p, slack))
                        {
                            blocked = true;
                            break;
                        }
                    }
                    if (blocked)
                        continue;
                    triangles.push_back({ip, ic, in});
                    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(i));
                    clipped = true;
                }
                if (clipped)
                    break;
            }
            if (!clipped)
                throw GeometryError("ear clipping found no ear; ring is not simple");
        }
        const Vec2 a = ring[remaining[0]];
        const Vec2 b = ring[remaining[1]];
        const Vec2 c = ring[remaining[2]];
        if (0.5 * cross(b - a, c - a) <= collinear_area_tolerance)
            throw GeometryError("ear clipping left a degenerate final triangle");
        triangles.push_back({remaining[0], remaining[1], remaining[2]});
        return triangles;
    }

    // ---- point index ------------------------------------------------------------------------------------------------

    PointIndex::PointIndex(const PointCloud& cloud, double bin_size): cloud_(&cloud), bin_size_(bin_size)
    {
        if (!(bin_size > 0.0))
            throw PreconditionError("point index bin size must be positive");
        for (const Vec3& p: cloud.points)
            bounds_.extend({p.x, p.y});
        if (bounds_.empty())
            return;
        bins_x_ = static_cast<std::size_t>(std::floor((bounds_.max.x - bounds_.min.x) / bin_size_)) + 1;
        bins_y_ = static_cast<std::size_t>(std::floor((bounds_.max.y - bounds_.min.y) / bin_size_)) + 1;
        std::vector<std::size_t> bin_of(cloud.points.size());
        offsets_.assign(bins_x_ * bins_y_ + 1, 0);
        for (std::size_t i = 0; i < cloud.points.size(); ++i)
        {
            const auto bx = std::min(bins_x_ - 1, static_cast<std::size_t>((cloud.points[i].x - bounds_.min.x) / bin_size_));
            const auto by = std::min(bins_y_ - 1, static_cast<std::size_t>((cloud.points[i].y - bounds_.min.y) / bin_size_));
            bin_of[i] = by * bins_x_ + bx;
            ++offsets_[bin_of[i] + 1];
        }
        std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
        entries_.resize(cloud.points.size());
        std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
        for (std::size_t i = 0; i < cloud.points.size(); ++i)
            entries_[cursor[bin_of[i]]++] = i;
    }

    std::vector<std::size_t> PointIndex::candidates(const Box2& box) const
    {
        std::vector<std::size_t> out;
        if (bounds_.empty() || box.empty() || box.max.x < bounds_.min.x || box.max.y < bounds_.min.y ||
            box.min.x > bounds_.max.x || box.min.y > bounds_.max.y)
            return out;
        auto bin = [this](double v, double lo, std::size_t count) {
            const double f = std::floor((v - lo) / bin_size_);
            return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(count - 1)));
        };
        const std::size_t x0 = bin(box.min.x, bounds_.min.x, bins_x_);
        const std::size_t x1 = bin(box.max.x, bounds_.min.x, bins_x_);
        const std::size_t y0 = bin(box.min.y, bounds_.min.y, bins_y_);
        const std::size_t y1 = bin(box.max.y, bounds_.min.y, bins_y_);
        for (std::size_t by = y0; by <= y1; ++by)
            for (std::size_t bx = x0; bx <= x1; ++bx)
            {
                const std::size_t b = by * bins_x_ + bx;
                out.insert(out.end(), entries_.begin() + static_cast<std::ptrdiff_t>(offsets_[b]),
                           entries_.begin() + static_cast<std::ptrdiff_t>(offsets_[b + 1]));
            }
        return out;
    }

    // ---- heights ----------------------------------------------------------------------------------------------------

    HeightEstimate estimate_height(const Footprint& fp, const PointIndex& index, double base_z, const HeightOptions& options)
    {
        const PointCloud& cloud = index.cloud();
        std::vector<double> z;
        for (const std::size_t i: index.candidates(bounds(fp.exterior)))
        {
            if (options.classes && (i >= cloud.classification.size() || !options.classes->contains(cloud.classification[i])))
                continue;
            const Vec3& p = cloud.points[i];
            if (ring_contains(fp.exterior, {p.x, p.y}))
                z.push_back(p.z);
        }
        if (z.empty())
            return {options.fallback_height, 0, true};

        // Sorting makes the floating-point sum independent of point order.
        std::sort(z.begin(), z.end());
        double statistic = 0.0;
        if (options.statistic == HeightStatistic::mean)
            statistic = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
        else
        {
            const double rank = std::clamp(options.percentile, 0.0, 100.0) / 100.0 * static_cast<double>(z.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(rank));
            const std::size_t hi = std::min(lo + 1, z.size() - 1);
            statistic = z[lo] + (rank - static_cast<double>(lo)) * (z[hi] - z[lo]);
        }
        const double height = statistic - base_z;
        if (!(height > 0.0))
            return {options.fallback_height, z.size(), true};
        return {height, z.size(), false};
    }

    double align_to_terrain(const Footprint& fp, const RasterGrid& terrain, double sink)
    {
        terrain.check();
        const Box2 box = bounds(fp.exterior);
        const GridSpec& spec = terrain.spec;
        if (box.min.x < spec.origin_x || box.min.y < spec.origin_y || box.max.x > spec.max_x() || box.max.y > spec.max_y())
            throw GeometryError(fmt::format("footprint '{}' lies outside the terrain extent", fp.feature_id));

        double lowest = std::numeric_limits<double>::infinity();
        for (const Vec2& p: fp.exterior)
        {
            const double v = raster::sample(terrain, p.x, p.y);
            if (!terrain.is_nodata(v))
                lowest = std::min(lowest, v);
        }
        const double sp = spec.cell_spacing;
        const auto c0 = static_cast<std::size_t>(std::max(0.0, std::floor((box.min.x - spec.origin_x) / sp)));
        const auto r0 = static_cast<std::size_t>(std::max(0.0, std::floor((box.min.y - spec.origin_y) / sp)));
        const auto c1 = std::min(spec.width - 1, static_cast<std::size_t>(std::floor((box.max.x - spec.origin_x) / sp)));
        const auto r1 = std::min(spec.height - 1, static_cast<std::size_t>(std::floor((box.max.y - spec.origin_y) / sp)));
        for (std::size_t r = r0; r <= r1; ++r)
            for (std::size_t c = c0; c <= c1; ++c)
            {
                if (!ring_contains(fp.exterior, {spec.center_x(c), spec.center_y(r)}))
                    continue;
                const double v = terrain.at(c, r);
                if (!terrain.is_nodata(v))
                    lowest = std::min(lowest, v);
            }
        if (!std::isfinite(lowest))
            throw GeometryError(fmt::format("footprint '{}' has no terrain samples", fp.feature_id));
        return lowest - sink;
    }

    TriangleMesh extrude_lod1(const Footprint& fp, double height, double base_z)
    {
        if (!(height > 0.0))
            throw PreconditionError(fmt::format("footprint '{}': extrusion height must be positive, got {}", fp.feature_id, height));
        const auto n = static_cast<std::uint32_t>(fp.exterior.size());
        if (n < 3 || !(fp.area() > 0.0))
            throw GeometryError(fmt::format("footprint '{}' must be a counterclockwise ring with positive area", fp.feature_id));
        const auto caps = triangulate_ear_clipping(fp.exterior);

        TriangleMesh mesh;
        mesh.vertices.reserve(2 * n);
        for (const Vec2& p: fp.exterior)
            mesh.vertices.push_back({p.x, p.y, base_z});
        for (const Vec2& p: fp.exterior)
            mesh.vertices.push_back({p.x, p.y, base_z + height});

        mesh.triangles.reserve(2 * caps.size() + 2 * n);
        for (const auto& t: caps)
        {
            mesh.triangles.push_back({t[0], t[2], t[1]});
            mesh.triangles.push_back({t[0] + n, t[1] + n, t[2] + n});
        }
        for (std::uint32_t i = 0; i < n; ++i)
        {
            const std::uint32_t j = (i + 1) % n;
            mesh.triangles.push_back({i, j, j + n});
            mesh.triangles.push_back({i, j + n, i + n});
        }
        return mesh;
    }

    std::string export_obj(std::span<const NamedMesh> meshes)
    {
        std::vector<const NamedMesh*> order;
        order.reserve(meshes.size());
        for (const NamedMesh& m: meshes)
            order.push_back(&m);
        std::stable_sort(order.begin(), order.end(), [](const NamedMesh* a, const NamedMesh* b) { return a->name < b->name; });

        std::string out = "# worldgen OBJ export; units: meters\n";
        std::size_t base = 1;
        for (const NamedMesh* m: order)
        {
            std::string name = m->name.empty() ? std::string("mesh") : m->name;
            for (char& ch: name)
                if (std::isspace(static_cast<unsigned char>(ch)))
                    ch = '_';
            out += "o " + name + '\n';
            for (const Vec3& v: m->mesh.vertices)
                out += fmt::format("v {} {} {}\n", io::format_double(v.x), io::format_double(v.y), io::format_double(v.z));
            for (const auto& t: m->mesh.triangles)
                out += fmt::format("f {} {} {}\n", t[0] + base, t[1] + base, t[2] + base);
            base += m->mesh.vertices.size();
        }
        return out;
    }
} // namespace worldgen::buildings
