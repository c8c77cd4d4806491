#pragma once

#include "worldgen/mesh.hpp"
#include "worldgen/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace worldgen::tubes
{
    inline constexpr std::size_t default_cap_vertices = 8;
    inline constexpr double default_radius = 0.5;
    inline constexpr double duplicate_distance = 1e-9;

    /// Drops points closer than duplicate_distance to their predecessor (with their scalars).
    /// Throws GeometryError when fewer than two points remain.
    Streamline clean(const Streamline& line);

    /// Tube around a cleaned streamline: a ring of cap_vertices vertices at `radius` around every point,
    /// perpendicular to the local tangent, with frames carried along by minimal rotation. Each end is
    /// closed by a fan from ring vertex 0; neighbouring rings are joined by two triangles per ring edge.
    /// V = P*C, F = 2(C-2) + 2(P-1)C, closed and outward facing.
    TriangleMesh generate_tube_mesh(const Streamline& line, std::size_t cap_vertices = default_cap_vertices,
                                    double radius = default_radius);

    struct SegmentInstance
    {
        Vec3 midpoint;
        Vec3 direction; ///< unit length
        double length {};
        double scalar {}; ///< mean of the endpoint scalars, 0 without scalars
    };

    /// One instance per segment of a cleaned streamline.
    std::vector<SegmentInstance> generate_segment_instances(const Streamline& line);

    /// Little-endian float32 records: midpoint xyz, direction xyz, length, scalar (32 bytes each).
    inline constexpr std::size_t instance_record_bytes = 32;
    std::vector<std::uint8_t> encode_instances(std::span<const SegmentInstance> instances);
    std::vector<SegmentInstance> decode_instances(std::span<const std::uint8_t> bytes);

    /// Compact in-memory size of a tube mesh: float32 xyz per vertex plus three u32 per triangle.
    std::size_t mesh_bytes(std::size_t vertices, std::size_t triangles) noexcept;

    struct BenchRow
    {
        std::string method; ///< "tube_mesh" or "segment_instances"
        std::size_t streamlines {};
        double median_ms {};
        std::vector<double> run_ms;
        std::size_t primitives {};  ///< triangles for tubes, instances for segments
        std::size_t vertices {};    ///< tube vertices; 0 for instances
        std::size_t bytes {};
    };

    struct BenchOptions
    {
        std::size_t cap_vertices {default_cap_vertices};
        double radius {default_radius};
        std::size_t runs {5};
    };

    struct BenchReport
    {
        BenchOptions options;
        std::vector<BenchRow> rows; ///< two rows per count, tube first

        nlohmann::json to_json() const;
        std::string to_table() const;
    };

    /// Times tube meshing and instance generation over the first `count` lines for each count
    /// (median of options.runs sequential runs). Throws PreconditionError when a count exceeds the dataset.
    BenchReport benchmark_generation(std::span<const Streamline> dataset, std::span<const std::size_t> counts,
                                     const BenchOptions& options = {});

    /// Deterministic smooth random walks used for benchmarks and tests: `points` points each, step
    /// length in [1, 2] m, heading changes bounded so tubes of radius <= 0.5 m do not fold.
    std::vector<Streamline> synthetic_streamlines(std::size_t count, std::size_t points, std::uint64_t seed);
} // namespace worldgen::tubes
