#include "worldgen/tubes.hpp"

#include "worldgen/datatex.hpp"
#include "worldgen/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numbers>

namespace worldgen::tubes
{
    Streamline clean(const Streamline& line)
    {
        Streamline out;
        const bool scalars = !line.scalar.empty();
        if (scalars && line.scalar.size() != line.points.size())
            throw GeometryError("streamline scalar count does not match point count");
        for (std::size_t i = 0; i < line.points.size(); ++i)
        {
            const Vec3 p = to_double(line.points[i]);
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
                throw GeometryError(fmt::format("streamline point {} is not finite", i));
            if (!out.points.empty() && norm(p - to_double(out.points.back())) <= duplicate_distance)
                continue;
            out.points.push_back(line.points[i]);
            if (scalars)
                out.scalar.push_back(line.scalar[i]);
        }
        if (out.points.size() < 2)
            throw GeometryError(fmt::format("streamline has {} distinct point(s) after cleaning", out.points.size()));
        return out;
    }

    namespace
    {
        void require_clean(const Streamline& line)
        {
            if (line.points.size() < 2)
                throw GeometryError(fmt::format("streamline has {} point(s), at least 2 required", line.points.size()));
            for (std::size_t i = 1; i < line.points.size(); ++i)
                if (!(norm(to_double(line.points[i]) - to_double(line.points[i - 1])) > duplicate_distance))
                    throw GeometryError(fmt::format("streamline points {} and {} coincide; clean the line first", i - 1, i));
        }

        Vec3 any_perpendicular(Vec3 t) noexcept
        {
            // Project the axis least aligned with t; for an x-aligned tangent this is the z axis.
            const double ax = std::abs(t.x), ay = std::abs(t.y), az = std::abs(t.z);
            Vec3 axis {0, 0, 1};
            if (az > ax && az >= ay)
                axis = ax <= ay ? Vec3 {1, 0, 0} : Vec3 {0, 1, 0};
            else if (ay > ax && az > ax)
                axis = {0, 0, 1};
            return normalized(axis - t * dot(axis, t));
        }

        /// Rotates v by the smallest rotation taking unit vector from onto unit vector to.
        Vec3 rotate_minimal(Vec3 v, Vec3 from, Vec3 to) noexcept
        {
            const Vec3 axis = cross(from, to);
            const double s = norm(axis);
            const double c = dot(from, to);
            if (s < 1e-12)
                return v;
            const Vec3 k = axis * (1.0 / s);
            return v * c + cross(k, v) * s + k * (dot(k, v) * (1.0 - c));
        }
    } // namespace

    TriangleMesh generate_tube_mesh(const Streamline& line, std::size_t cap_vertices, double radius)
    {
        if (cap_vertices < 3)
            throw PreconditionError(fmt::format("cap vertices must be at least 3, got {}", cap_vertices));
        if (!(radius > 0.0))
            throw PreconditionError("tube radius must be positive");
        require_clean(line);

        const std::size_t count = line.points.size();
        const std::size_t ring = cap_vertices;
        std::vector<Vec3> points(count);
        std::transform(line.points.begin(), line.points.end(), points.begin(), to_double);

        std::vector<double> cos_k(ring), sin_k(ring);
        for (std::size_t k = 0; k < ring; ++k)
        {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(ring);
            cos_k[k] = std::cos(angle);
            sin_k[k] = std::sin(angle);
        }

        TriangleMesh mesh;
        mesh.vertices.reserve(count * ring);
        Vec3 prev_tangent {};
        Vec3 normal {};
        for (std::size_t i = 0; i < count; ++i)
        {
            Vec3 d = i == 0 ? points[1] - points[0]
                   : i + 1 == count ? points[i] - points[i - 1]
                                    : points[i + 1] - points[i - 1];
            if (norm(d) < 1e-12) // the line doubles back on itself
                d = points[i + 1] - points[i];
            const Vec3 tangent = normalized(d);
            if (i == 0)
                normal = any_perpendicular(tangent);
            else
                normal = rotate_minimal(normal, prev_tangent, tangent);
            normal = normal - tangent * dot(normal, tangent);
            if (norm(normal) < 1e-9)
                normal = any_perpendicular(tangent);
            normal = normalized(normal);
            const Vec3 binormal = cross(tangent, normal);
            for (std::size_t k = 0; k < ring; ++k)
                mesh.vertices.push_back(points[i] + (normal * cos_k[k] + binormal * sin_k[k]) * radius);
            prev_tangent = tangent;
        }

        const auto c = static_cast<std::uint32_t>(ring);
        mesh.triangles.reserve(2 * (ring - 2) + 2 * (count - 1) * ring);
        const auto last = static_cast<std::uint32_t>((count - 1) * ring);
        for (std::uint32_t k = 1; k + 1 < c; ++k)
            mesh.triangles.push_back({0, k + 1, k});
        for (std::uint32_t k = 1; k + 1 < c; ++k)
            mesh.triangles.push_back({last, last + k, last + k + 1});
        for (std::uint32_t i = 0; i + 1 < count; ++i)
            for (std::uint32_t k = 0; k < c; ++k)
            {
                const std::uint32_t a = i * c + k;
                const std::uint32_t b = i * c + (k + 1) % c;
                const std::uint32_t d = a + c;
                const std::uint32_t e = b + c;
                mesh.triangles.push_back({a, b, d});
                mesh.triangles.push_back({b, e, d});
            }
        return mesh;
    }

    std::vector<SegmentInstance> generate_segment_instances(const Streamline& line)
    {
        require_clean(line);
        const bool scalars = line.scalar.size() == line.points.size();
        std::vector<SegmentInstance> out;
        out.reserve(line.points.size() - 1);
        for (std::size_t k = 0; k + 1 < line.points.size(); ++k)
        {
            const Vec3 a = to_double(line.points[k]);
            const Vec3 b = to_double(line.points[k + 1]);
            const Vec3 d = b - a;
            const double length = norm(d);
            out.push_back({(a + b) * 0.5, d * (1.0 / length), length,
                           scalars ? 0.5 * (static_cast<double>(line.scalar[k]) + line.scalar[k + 1]) : 0.0});
        }
        return out;
    }

    std::vector<std::uint8_t> encode_instances(std::span<const SegmentInstance> instances)
    {
        static_assert(std::endian::native == std::endian::little, "instance records are written little-endian");
        std::vector<std::uint8_t> out(instances.size() * instance_record_bytes);
        for (std::size_t i = 0; i < instances.size(); ++i)
        {
            const SegmentInstance& s = instances[i];
            const float record[8] = {static_cast<float>(s.midpoint.x),  static_cast<float>(s.midpoint.y),
                                     static_cast<float>(s.midpoint.z),  static_cast<float>(s.direction.x),
                                     static_cast<float>(s.direction.y), static_cast<float>(s.direction.z),
                                     static_cast<float>(s.length),      static_cast<float>(s.scalar)};
            std::memcpy(out.data() + i * instance_record_bytes, record, instance_record_bytes);
        }
        return out;
    }

    std::vector<SegmentInstance> decode_instances(std::span<const std::uint8_t> bytes)
    {
        if (bytes.size() % instance_record_bytes != 0)
            throw ParseError(fmt::format("instance data size {} is not a multiple of {}", bytes.size(), instance_record_bytes));
        std::vector<SegmentInstance> out(bytes.size() / instance_record_bytes);
        for (std::size_t i = 0; i < out.size(); ++i)
        {
            float r[8];
            std::memcpy(r, bytes.data() + i * instance_record_bytes, instance_record_bytes);
            out[i] = {{r[0], r[1], r[2]}, {r[3], r[4], r[5]}, r[6], r[7]};
        }
        return out;
    }

    std::size_t mesh_bytes(std::size_t vertices, std::size_t triangles) noexcept
    {
        return vertices * 3 * sizeof(float) + triangles * 3 * sizeof(std::uint32_t);
    }

    // ---- benchmark ---------------------------------------------------------------------------------------------------

    namespace
    {
        double median(std::vector<double> v)
        {
            std::sort(v.begin(), v.end());
            const std::size_t n = v.size();
            return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        }

        template <typename Fn>
        double time_ms(Fn&& fn)
        {
            const auto start = std::chrono::steady_clock::now();
            fn();
            return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
    } // namespace

    BenchReport benchmark_generation(std::span<const Streamline> dataset, std::span<const std::size_t> counts,
                                     const BenchOptions& options)
    {
        if (options.runs == 0)
            throw PreconditionError("benchmark needs at least one run");
        for (const std::size_t count: counts)
            if (count > dataset.size())
                throw PreconditionError(fmt::format("benchmark count {} exceeds the dataset's {} streamlines", count, dataset.size()));

        BenchReport report;
        report.options = options;
        for (const std::size_t count: counts)
        {
            const auto subset = dataset.first(count);
            BenchRow tube;
            tube.method = "tube_mesh";
            tube.streamlines = count;
            BenchRow inst;
            inst.method = "segment_instances";
            inst.streamlines = count;
            for (std::size_t run = 0; run < options.runs; ++run)
            {
                std::size_t triangles = 0, vertices = 0;
                tube.run_ms.push_back(time_ms([&] {
                    for (const Streamline& s: subset)
                    {
                        const TriangleMesh mesh = generate_tube_mesh(s, options.cap_vertices, options.radius);
                        triangles += mesh.triangles.size();
                        vertices += mesh.vertices.size();
                    }
                }));
                tube.primitives = triangles;
                tube.vertices = vertices;

                std::size_t instances = 0;
                inst.run_ms.push_back(time_ms([&] {
                    for (const Streamline& s: subset)
                        instances += generate_segment_instances(s).size();
                }));
                inst.primitives = instances;
            }
            tube.median_ms = median(tube.run_ms);
            inst.median_ms = median(inst.run_ms);
            tube.bytes = mesh_bytes(tube.vertices, tube.primitives);
            inst.bytes = inst.primitives * instance_record_bytes;
            report.rows.push_back(std::move(tube));
            report.rows.push_back(std::move(inst));
        }
        return report;
    }

    nlohmann::json BenchReport::to_json() const
    {
        nlohmann::json rows_json = nlohmann::json::array();
        for (const BenchRow& r: rows)
            rows_json.push_back({{"method", r.method},
                                 {"streamlines", r.streamlines},
                                 {"median_ms", r.median_ms},
                                 {"run_ms", r.run_ms},
                                 {"primitives", r.primitives},
                                 {"vertices", r.vertices},
                                 {"bytes", r.bytes}});
        return {{"cap_vertices", options.cap_vertices}, {"radius", options.radius}, {"runs", options.runs}, {"rows", rows_json}};
    }

    std::string BenchReport::to_table() const
    {
        std::string out = fmt::format("{:>11}  {:<18}  {:>10}  {:>12}  {:>14}\n", "streamlines", "method", "median ms",
                                      "primitives", "bytes");
        for (const BenchRow& r: rows)
            out += fmt::format("{:>11}  {:<18}  {:>10.3f}  {:>12}  {:>14}\n", r.streamlines, r.method, r.median_ms,
                               r.primitives, r.bytes);
        return out;
    }

    std::vector<Streamline> synthetic_streamlines(std::size_t count, std::size_t points, std::uint64_t seed)
    {
        const datatex::CounterRng rng(seed);
        std::uint64_t counter = 0;
        auto uniform = [&] { return rng.uniform(counter++); };
        std::vector<Streamline> lines(count);
        for (Streamline& line: lines)
        {
            Vec3 p {uniform() * 500.0, uniform() * 500.0, 2.0 + uniform() * 48.0};
            Vec3 heading = normalized(Vec3 {uniform() - 0.5, uniform() - 0.5, 0.2 * (uniform() - 0.5)} + Vec3 {1e-3, 0, 0});
            line.points.reserve(points);
            line.scalar.reserve(points);
            for (std::size_t k = 0; k < points; ++k)
            {
                line.points.push_back({static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z)});
                line.scalar.push_back(static_cast<float>(1.0 + 4.0 * uniform()));
                const Vec3 jitter {uniform() - 0.5, uniform() - 0.5, uniform() - 0.5};
                heading = normalized(heading + jitter * 0.3);
                p = p + heading * (1.0 + uniform());
            }
        }
        return lines;
    }
} // namespace worldgen::tubes
