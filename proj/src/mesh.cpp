#include "worldgen/mesh.hpp"

#include "worldgen/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <unordered_map>

namespace worldgen
{
    ManifoldReport analyze_manifold(const TriangleMesh& mesh, double area_epsilon)
    {
        ManifoldReport report;
        report.vertex_count = mesh.vertices.size();
        report.face_count = mesh.triangles.size();

        // Directed edge key: (from, to) packed into 64 bits.
        auto key = [](std::uint64_t a, std::uint64_t b) { return (a << 32) | b; };
        std::unordered_map<std::uint64_t, int> directed;
        directed.reserve(mesh.triangles.size() * 3);
        const auto n = static_cast<std::uint32_t>(mesh.vertices.size());
        for (const auto& t: mesh.triangles)
        {
            if (t[0] >= n || t[1] >= n || t[2] >= n)
            {
                report.indices_in_range = false;
                continue;
            }
            const Vec3 a = mesh.vertices[t[0]];
            const Vec3 b = mesh.vertices[t[1]];
            const Vec3 c = mesh.vertices[t[2]];
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2] || 0.5 * norm(cross(b - a, c - a)) <= area_epsilon)
                ++report.degenerate_triangles;
            for (int k = 0; k < 3; ++k)
                ++directed[key(t[k], t[(k + 1) % 3])];
        }

        std::unordered_map<std::uint64_t, int> undirected;
        undirected.reserve(directed.size());
        for (const auto& [k, count]: directed)
        {
            if (count > 1)
                report.misoriented_edges += static_cast<std::size_t>(count - 1);
            const std::uint64_t from = k >> 32;
            const std::uint64_t to = k & 0xFFFFFFFFu;
            undirected[key(std::min(from, to), std::max(from, to))] += count;
        }
        report.edge_count = undirected.size();
        for (const auto& [k, count]: undirected)
            if (count != 2)
                ++report.boundary_or_nonmanifold_edges;
        return report;
    }

    double signed_volume(const TriangleMesh& mesh) noexcept
    {
        if (mesh.vertices.empty())
            return 0.0;
        // Relative to the first vertex so georeferenced coordinates do not swamp the sum.
        const Vec3 o = mesh.vertices.front();
        double six_v = 0.0;
        for (const auto& t: mesh.triangles)
            six_v += dot(mesh.vertices[t[0]] - o, cross(mesh.vertices[t[1]] - o, mesh.vertices[t[2]] - o));
        return six_v / 6.0;
    }

    std::vector<NamedMesh> parse_obj(std::string_view text)
    {
        std::vector<NamedMesh> meshes;
        std::vector<Vec3> all_vertices;
        // Vertex indices are global in OBJ; each object gets a compacted local copy.
        std::unordered_map<std::uint32_t, std::uint32_t> local;

        auto parse_double = [](std::string_view s, std::size_t line) {
            double v = 0.0;
            const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size())
                throw ParseError(fmt::format("OBJ line {}: '{}' is not a number", line, s), line);
            return v;
        };

        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos < text.size())
        {
            std::size_t end = text.find('\n', pos);
            if (end == std::string_view::npos)
                end = text.size();
            std::string_view line = text.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);

            std::vector<std::string_view> tok;
            std::size_t i = 0;
            while (i < line.size())
            {
                while (i < line.size() && line[i] == ' ')
                    ++i;
                const std::size_t s = i;
                while (i < line.size() && line[i] != ' ')
                    ++i;
                if (i > s)
                    tok.push_back(line.substr(s, i - s));
            }
            if (tok.empty() || tok[0].starts_with('#'))
                continue;

            if (tok[0] == "o")
            {
                meshes.push_back({tok.size() > 1 ? std::string(tok[1]) : std::string(), {}});
                local.clear();
            }
            else if (tok[0] == "v")
            {
                if (tok.size() < 4)
                    throw ParseError(fmt::format("OBJ line {}: vertex needs 3 coordinates", line_no), line_no);
                all_vertices.push_back({parse_double(tok[1], line_no), parse_double(tok[2], line_no), parse_double(tok[3], line_no)});
            }
            else if (tok[0] == "f")
            {
                if (tok.size() != 4)
                    throw ParseError(fmt::format("OBJ line {}: only triangular faces are supported", line_no), line_no);
                if (meshes.empty())
                    meshes.push_back({});
                std::array<std::uint32_t, 3> tri {};
                for (int k = 0; k < 3; ++k)
                {
                    std::string_view idx = tok[static_cast<std::size_t>(k + 1)];
                    idx = idx.substr(0, idx.find('/'));
                    long long v = 0;
                    const auto [p, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), v);
                    if (ec != std::errc() || v < 1 || static_cast<std::size_t>(v) > all_vertices.size())
                        throw ParseError(fmt::format("OBJ line {}: bad vertex index '{}'", line_no, idx), line_no);
                    const auto global = static_cast<std::uint32_t>(v - 1);
                    auto [it, inserted] = local.try_emplace(global, static_cast<std::uint32_t>(meshes.back().mesh.vertices.size()));
                    if (inserted)
                        meshes.back().mesh.vertices.push_back(all_vertices[global]);
                    tri[static_cast<std::size_t>(k)] = it->second;
                }
                meshes.back().mesh.triangles.push_back(tri);
            }
        }
        return meshes;
    }
} // namespace worldgen
