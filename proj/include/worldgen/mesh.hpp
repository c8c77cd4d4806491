#pragma once

#include "worldgen/geometry.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace worldgen
{
    /// Indexed triangle mesh; counterclockwise winding seen from outside.
    struct TriangleMesh
    {
        std::vector<Vec3> vertices;
        std::vector<std::array<std::uint32_t, 3>> triangles;
    };

    struct NamedMesh
    {
        std::string name;
        TriangleMesh mesh;
    };

    struct ManifoldReport
    {
        bool indices_in_range {true};
        std::size_t degenerate_triangles {};
        std::size_t vertex_count {};
        std::size_t edge_count {};
        std::size_t face_count {};
        std::size_t boundary_or_nonmanifold_edges {}; ///< undirected edges not shared by exactly two triangles
        std::size_t misoriented_edges {};             ///< directed edges used twice (inconsistent winding)

        long long euler_characteristic() const noexcept
        {
            return static_cast<long long>(vertex_count) - static_cast<long long>(edge_count) +
                   static_cast<long long>(face_count);
        }

        /// Closed, consistently oriented, no degenerate faces, Euler characteristic 2.
        bool closed_manifold() const noexcept
        {
            return indices_in_range && degenerate_triangles == 0 && boundary_or_nonmanifold_edges == 0 &&
                   misoriented_edges == 0 && euler_characteristic() == 2;
        }
    };

    /// Edge-pairing analysis. Triangles with area below `area_epsilon` count as degenerate.
    ManifoldReport analyze_manifold(const TriangleMesh& mesh, double area_epsilon = 0.0);

    /// Divergence-theorem volume; positive when faces point outward.
    double signed_volume(const TriangleMesh& mesh) noexcept;

    /// Reads the "o", "v" and "f" records of a Wavefront OBJ (triangles only, 1-based indices).
    std::vector<NamedMesh> parse_obj(std::string_view text);
} // namespace worldgen
