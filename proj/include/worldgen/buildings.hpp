#pragma once

#include "worldgen/mesh.hpp"
#include "worldgen/types.hpp"

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace worldgen::buildings
{
    inline constexpr double default_fallback_height = 3.0;
    inline constexpr double default_terrain_sink = 0.2;
    inline constexpr double collinear_area_tolerance = 1e-9;

    /// Simple building outline: open counterclockwise ring with positive area.
    struct Footprint
    {
        Ring exterior;
        std::string feature_id;

        double area() const noexcept { return signed_area(exterior); }
    };

    /// Validates a polygon feature and normalizes it: drops repeated and collinear vertices, orients
    /// counterclockwise. Throws GeometryError for holes, self-intersections and zero area.
    Footprint make_footprint(const Feature& feature);

    /// Removes consecutive duplicates and vertices whose triangle with their neighbours has area below tolerance.
    Ring prune_collinear(const Ring& ring, double area_tolerance = collinear_area_tolerance);

    /// Ear clipping of a simple counterclockwise ring; returns index triples into `ring`, each counterclockwise.
    std::vector<std::array<std::uint32_t, 3>> triangulate_ear_clipping(std::span<const Vec2> ring);

    /// Uniform 2D bin grid over a point cloud, built once and shared read-only.
    class PointIndex
    {
    public:
        PointIndex(const PointCloud& cloud, double bin_size = 5.0);

        /// Indices of points whose bin overlaps the box.
        std::vector<std::size_t> candidates(const Box2& box) const;
        const PointCloud& cloud() const noexcept { return *cloud_; }

    private:
        const PointCloud* cloud_;
        double bin_size_;
        Box2 bounds_;
        std::size_t bins_x_ {};
        std::size_t bins_y_ {};
        std::vector<std::size_t> offsets_; // CSR layout: bin -> [offsets_[b], offsets_[b+1])
        std::vector<std::size_t> entries_;
    };

    enum class HeightStatistic
    {
        mean,
        percentile,
    };

    struct HeightOptions
    {
        HeightStatistic statistic {HeightStatistic::mean};
        double percentile {90.0};
        double fallback_height {default_fallback_height};
        /// When set, only points with one of these LAS classes are used.
        std::optional<std::set<std::uint8_t>> classes;
    };

    struct HeightEstimate
    {
        double height {};
        std::size_t points_used {};
        bool used_fallback {false};
    };

    /// Statistic of z over points inside the footprint minus base_z. No points, or a non-positive
    /// result, yields the fallback height with used_fallback set.
    HeightEstimate estimate_height(const Footprint& fp, const PointIndex& index, double base_z, const HeightOptions& options = {});

    /// Minimum bilinear terrain sample over ring vertices and interior cell centers, minus `sink`.
    /// Throws GeometryError when the footprint's bounding box is not covered by the terrain.
    double align_to_terrain(const Footprint& fp, const RasterGrid& terrain, double sink = default_terrain_sink);

    /// LoD1 prism: bottom cap at base_z facing down, top cap at base_z + height facing up, two triangles per wall.
    TriangleMesh extrude_lod1(const Footprint& fp, double height, double base_z);

    /// Wavefront OBJ, one "o" block per mesh ordered by name, 1-based indices, meters.
    std::string export_obj(std::span<const NamedMesh> meshes);
} // namespace worldgen::buildings
