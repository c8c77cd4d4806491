// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include "support.hpp"

#include "worldgen/buildings.hpp"
#include "worldgen/datatex.hpp"
#include "worldgen/io.hpp"
#include "worldgen/mesh.hpp"
#include "worldgen/pipeline.hpp"
#include "worldgen/raster.hpp"
#include "worldgen/sample.hpp"
#include "worldgen/tiler.hpp"
#include "worldgen/tubes.hpp"

#include <fmt/format.h>
#include <sys/resource.h>

#include <bit>
#include <chrono>
#include <cstring>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <numbers>

using namespace worldgen;

namespace
{
    // Tolerances and limits, one per criterion.
    constexpr double zfold_seconds_limit = 5.0;
    constexpr double trilinear_step_limit = 1.5;
    constexpr std::size_t split_patterns = 1'000'000;
    constexpr std::size_t scale_lines = 10'000;
    constexpr std::size_t scale_points = 1000;
    constexpr double scale_seconds_limit = 60.0;
    constexpr double scale_rss_limit_gb = 4.0;
    constexpr std::size_t tube_trials = 200;
    constexpr std::size_t bench_counts[] = {1003, 4158, 8316, 12474};
    constexpr std::size_t bench_runs = 5;
    constexpr std::size_t bench_cap_vertices = 8;
    constexpr std::size_t bench_points = 100;
    constexpr std::size_t footprint_trials = 100;
    constexpr double volume_relative_tolerance = 1e-6;
    constexpr double triangle_fraction_tolerance = 0.02;
    constexpr double buffer_area_tolerance = 0.02;
    constexpr std::size_t tiling_trials = 50;
    constexpr double end_to_end_seconds_limit = 60.0;

    struct Outcome
    {
        bool pass {};
        std::string detail;
    };

    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

    double peak_rss_gb()
    {
        rusage usage {};
        getrusage(RUSAGE_SELF, &usage);
        return static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0); // ru_maxrss is in KiB
    }

    Outcome zfold_dimensions()
    {
        Volume3D vol(512, 512, 64);
        for (std::size_t i = 0; i < vol.values.size(); ++i)
            vol.values[i] = static_cast<float>(i % 977);
        const auto t0 = Clock::now();
        const datatex::DataTexture tex = datatex::zfold_encode(vol, 8, 8);
        const double s = seconds_since(t0);
        const bool ok = tex.width == 4096 && tex.height == 4096 && s < zfold_seconds_limit;
        return {ok, fmt::format("{}x{} texture in {:.2f} s", tex.width, tex.height, s)};
    }

    /// Eight-corner weighted sum, independent of the library sampler.
    double trilinear_oracle(const Volume3D& v, double x, double y, double z)
    {
        double sum = 0.0;
        for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                {
                    const double cx = std::floor(x) + dx, cy = std::floor(y) + dy, cz = std::floor(z) + dz;
                    const double w = (1 - std::abs(x - cx)) * (1 - std::abs(y - cy)) * (1 - std::abs(z - cz));
                    if (w > 0.0)
                        sum += w * v.at(static_cast<std::size_t>(cx), static_cast<std::size_t>(cy), static_cast<std::size_t>(cz));
                }
        return sum;
    }

    Outcome trilinear_equivalence()
    {
        testing::Gen g(1002);
        double worst = 0.0;
        std::size_t points = 0;
        while (points < 1000)
        {
            Volume3D vol(g.index(2, 16), g.index(2, 16), g.index(2, 16));
            for (float& v: vol.values)
                v = static_cast<float>(g.uniform(-100, 100));
            const auto [tx, ty] = datatex::default_fold(vol.nz);
            const datatex::DataTexture tex = datatex::zfold_encode(vol, tx, ty);
            const double step = (tex.normalization->max - tex.normalization->min) / 65535.0;
            for (int k = 0; k < 100; ++k, ++points)
            {
                const double x = g.uniform(0, static_cast<double>(vol.nx - 1));
                const double y = g.uniform(0, static_cast<double>(vol.ny - 1));
                const double z = g.uniform(0, static_cast<double>(vol.nz - 1));
                worst = std::max(worst, std::abs(datatex::zfold_sample(tex, x, y, z) - trilinear_oracle(vol, x, y, z)) / step);
            }
        }
        return {worst <= trilinear_step_limit, fmt::format("max error {:.3f} steps over {} points", worst, points)};
    }

    Outcome split_round_trip()
    {
        testing::Gen g(1003);
        std::vector<std::uint32_t> patterns {0x7F800000u, 0xFF800000u, 0x7FC00000u, 0xFFC00000u, 0x7F800001u, 0x7FBFFFFFu,
                                             0xFFFFFFFFu, 0x00000001u, 0x80000000u, 0x00000000u};
        while (patterns.size() < split_patterns)
            patterns.push_back(g.bits32());
        std::size_t failures = 0, nonfinite = 0;
        for (const std::uint32_t bits: patterns)
        {
            const float v = std::bit_cast<float>(bits);
            nonfinite += std::isfinite(v) ? 0 : 1;
            const datatex::SplitF32 s = datatex::split_f32(v);
            failures += std::bit_cast<std::uint32_t>(datatex::merge_f32(s.hi, s.lo)) == bits ? 0 : 1;
        }
        return {failures == 0, fmt::format("{} patterns ({} NaN/Inf), {} failures", patterns.size(), nonfinite, failures)};
    }

    Outcome streamline_scale()
    {
        testing::Gen g(1004);
        std::vector<Streamline> lines(scale_lines);
        for (Streamline& s: lines)
        {
            s.points.resize(scale_points);
            s.scalar.resize(scale_points);
            for (std::size_t k = 0; k < scale_points; ++k)
            {
                s.points[k] = {std::bit_cast<float>(g.bits32() & 0x4FFFFFFFu), static_cast<float>(g.uniform(0, 6e6)),
                               static_cast<float>(g.uniform(-50, 3000))};
                s.scalar[k] = static_cast<float>(g.uniform(0, 1));
            }
        }
        const auto t0 = Clock::now();
        const datatex::StreamlineTextures tex = datatex::encode_streamlines_texture(lines);
        const std::vector<Streamline> back = datatex::decode_streamlines_texture(tex);
        const double s = seconds_since(t0);
        std::size_t mismatched = 0;
        for (std::size_t i = 0; i < lines.size(); ++i)
        {
            const bool same = back[i].points.size() == lines[i].points.size() && back[i].scalar.size() == lines[i].scalar.size() &&
                              std::memcmp(back[i].points.data(), lines[i].points.data(), lines[i].points.size() * sizeof(Vec3f)) == 0 &&
                              std::memcmp(back[i].scalar.data(), lines[i].scalar.data(), lines[i].scalar.size() * sizeof(float)) == 0;
            mismatched += same ? 0 : 1;
        }
        const double rss = peak_rss_gb();
        const bool ok = back.size() == lines.size() && mismatched == 0 && s < scale_seconds_limit && rss < scale_rss_limit_gb;
        return {ok, fmt::format("{} x {} points, {} mismatched lines, {:.2f} s, peak RSS {:.2f} GB", scale_lines, scale_points,
                                mismatched, s, rss)};
    }

    Outcome tube_topology()
    {
        testing::Gen g(1005);
        const auto pool = tubes::synthetic_streamlines(tube_trials, 100, 1005);
        std::size_t failures = 0;
        for (std::size_t i = 0; i < tube_trials; ++i)
        {
            const std::size_t p = g.index(2, 100), c = g.index(3, 16);
            Streamline line = pool[i];
            line.points.resize(p);
            line.scalar.resize(p);
            const TriangleMesh m = tubes::generate_tube_mesh(tubes::clean(line), c, g.uniform(0.1, 0.5));
            const ManifoldReport r = analyze_manifold(m);
            const bool ok = m.vertices.size() == p * c && m.triangles.size() == 2 * (c - 2) + 2 * (p - 1) * c &&
                            r.euler_characteristic() == 2 && r.closed_manifold() && signed_volume(m) > 0.0;
            failures += ok ? 0 : 1;
        }
        return {failures == 0, fmt::format("{} tubes, {} failures", tube_trials, failures)};
    }

    Outcome benchmark_ordering()
    {
        const auto lines = tubes::synthetic_streamlines(bench_counts[std::size(bench_counts) - 1], bench_points, sample::default_seed);
        tubes::BenchOptions options;
        options.cap_vertices = bench_cap_vertices;
        options.runs = bench_runs;
        const tubes::BenchReport report = tubes::benchmark_generation(lines, bench_counts, options);
        std::size_t timing_wins = 0, timing_total = 0;
        double worst_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < report.rows.size(); i += 2)
        {
            const tubes::BenchRow& tube = report.rows[i];
            const tubes::BenchRow& inst = report.rows[i + 1];
            for (std::size_t r = 0; r < bench_runs; ++r, ++timing_total)
                timing_wins += inst.run_ms[r] < tube.run_ms[r] ? 1 : 0;
            worst_ratio = std::min(worst_ratio, static_cast<double>(tube.primitives) / static_cast<double>(inst.primitives));
        }
        const bool ok = timing_wins == timing_total && worst_ratio >= 2.0 * bench_cap_vertices;
        return {ok, fmt::format("instances faster in {}/{} runs, min triangle/instance ratio {:.2f} (need {})", timing_wins,
                                timing_total, worst_ratio, 2 * bench_cap_vertices)};
    }

    Outcome lod1_correctness()
    {
        testing::Gen g(1007);
        std::size_t failures = 0;
        double worst = 0.0;
        for (std::size_t i = 0; i < footprint_trials; ++i)
        {
            Feature f;
            f.feature_id = fmt::format("fp{}", i);
            f.rings = {i % 2 == 0 ? testing::random_star_polygon(g, g.index(3, 40), {g.uniform(0, 1e4), g.uniform(0, 1e4)}, 3, 30)
                                  : testing::random_histogram_polygon(g, g.index(1, 12), g.uniform(0, 6.3), {g.uniform(0, 1e4), 0})};
            const buildings::Footprint fp = buildings::make_footprint(f);
            const double h = g.uniform(2, 80);
            const TriangleMesh m = buildings::extrude_lod1(fp, h, g.uniform(0, 400));
            const double expected = std::abs(testing::shoelace(fp.exterior)) * h;
            const double rel = std::abs(signed_volume(m) - expected) / expected;
            worst = std::max(worst, rel);
            failures += (rel <= volume_relative_tolerance && analyze_manifold(m).closed_manifold()) ? 0 : 1;
        }
        return {failures == 0, fmt::format("{} footprints, {} failures, max relative volume error {:.2e}", footprint_trials, failures, worst)};
    }

    double ones(const RasterGrid& g)
    {
        double s = 0.0;
        for (double v: g.values)
            s += v;
        return s;
    }

    Outcome rasterization_convergence()
    {
        VectorLayer tri;
        tri.features.push_back({{{{0, 0}, {1, 0}, {0, 1}}}, {}, "x", std::nullopt, "t"});
        const GridSpec spec {0, 0, 1.0 / 256.0, 256, 256};
        const double fraction = ones(raster::rasterize_polygons_binary(tri, spec)) / (256.0 * 256.0);

        VectorLayer road;
        road.kind = LayerKind::polyline;
        road.features.push_back({{}, {{20, 20}, {120, 20}}, "a", std::nullopt, "s"});
        const raster::RoadClassWidths widths({{"a", 8}, {"b", 4}, {"c", 2}, {"d", 1}});
        const double analytic = 100 * 8 + std::numbers::pi * 16;
        const double area = ones(raster::rasterize_buffered_polylines(road, widths, GridSpec {0, 0, 0.5, 280, 90})) * 0.25;
        const double rel = std::abs(area - analytic) / analytic;
        const bool ok = std::abs(fraction - 0.5) <= triangle_fraction_tolerance && rel <= buffer_area_tolerance;
        return {ok, fmt::format("triangle fraction {:.4f}, buffer area {:.2f} vs {:.2f} ({:.2f}%)", fraction, area, analytic, 100 * rel)};
    }

    Outcome tiling_round_trip()
    {
        testing::Gen g(1009);
        const auto dir = testing::scratch_dir("acceptance_tiles");
        std::size_t identity_failures = 0, png_failures = 0, naming_failures = 0;
        for (std::size_t trial = 0; trial < tiling_trials; ++trial)
        {
            RasterGrid grid(GridSpec {g.uniform(-1e4, 1e4), g.uniform(-1e4, 1e4), g.uniform(0.5, 4), g.index(1, 80), g.index(1, 80)});
            for (double& v: grid.values)
                v = g.uniform(-20, 900);
            const tiler::NamingScheme naming {fmt::format("grid{}", trial)};
            const std::size_t size = g.index(1, 40);
            const tiler::TileSet set = tiler::retile(grid, size, naming, trial % 2 == 0 ? tiler::PaddingMode::edge : tiler::PaddingMode::zero);
            const RasterGrid back = tiler::reassemble(set);
            identity_failures += (back.spec == grid.spec && back.values == grid.values) ? 0 : 1;

            const tiler::QuantSpec q = tiler::Height16 {-20, 900};
            const auto sub = dir / naming.basename;
            const tiler::TileSetRecord rec = tiler::write_tiles(set, q, sub);
            const RasterGrid png_back = tiler::reassemble(tiler::read_tiles(rec, sub));
            double worst = 0.0;
            for (std::size_t i = 0; i < grid.values.size(); ++i)
                worst = std::max(worst, std::abs(png_back.values[i] - grid.values[i]));
            png_failures += worst <= tiler::quantization_step(q) ? 0 : 1;

            for (const auto& [index, tile]: set.tiles)
                naming_failures += naming.parse(naming.name(index.col, index.row)) == std::pair {index.col, index.row} ? 0 : 1;
        }
        const bool ok = identity_failures == 0 && png_failures == 0 && naming_failures == 0;
        return {ok, fmt::format("{} grids: {} identity, {} PNG, {} naming failures", tiling_trials, identity_failures, png_failures,
                                naming_failures)};
    }

    const std::filesystem::path& sample_config()
    {
        static const std::filesystem::path path = sample::write_sample_dataset(testing::scratch_dir("acceptance_sample"));
        return path;
    }

    Outcome overlap_invariant()
    {
        const pipeline::PipelineConfig c = pipeline::load_config(sample_config());
        const GridSpec grid {0, 0, c.grid.cell_spacing, 2000, 1000};
        const RasterGrid road = pipeline::road_mask(pipeline::load_layer(*c.inputs.roads, LayerKind::polyline, c), c.roads, grid);
        const auto masks = pipeline::landuse_masks(pipeline::load_layer(*c.inputs.landuse, LayerKind::polygon, c), c.landuse, grid, &road);
        const std::size_t violations = pipeline::overlap_violations(road, masks);
        return {violations == 0, fmt::format("{} cells checked across {} classes, {} violations", grid.width * grid.height,
                                             masks.size(), violations)};
    }

    Outcome end_to_end()
    {
        nlohmann::json j = nlohmann::json::parse(io::read_text(sample_config()));
        const auto base = sample_config().parent_path();
        std::map<std::string, std::string> sums[2];
        double first_seconds = 0.0;
        bool valid = true;
        std::size_t files = 0;
        for (int run = 0; run < 2; ++run)
        {
            j["output_dir"] = fmt::format("out_{}", run);
            const pipeline::PipelineConfig c = pipeline::parse_config(j, base);
            std::filesystem::remove_all(c.output_dir);
            const auto t0 = Clock::now();
            const pipeline::Manifest m = pipeline::run_pipeline(c);
            const pipeline::ValidationReport v = pipeline::cmd_validate(c.output_dir);
            if (run == 0)
                first_seconds = seconds_since(t0);
            valid = valid && m.status == "complete" && v.ok();
            files = m.files.size();
            for (const auto& f: m.files)
                sums[run][f.path] = f.sha256;
        }
        const bool identical = sums[0] == sums[1];
        const bool ok = valid && identical && first_seconds < end_to_end_seconds_limit;
        return {ok, fmt::format("{} files, validated {}, {:.2f} s, rerun checksums {}", files, valid ? "yes" : "no", first_seconds,
                                identical ? "identical" : "differ")};
    }
} // namespace

int main()
{
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"z-fold dimensions", zfold_dimensions},
        {"trilinear equivalence", trilinear_equivalence},
        {"32-bit split round-trip", split_round_trip},
        {"streamline scale", streamline_scale},
        {"tube mesh topology", tube_topology},
        {"benchmark ordering", benchmark_ordering},
        {"LoD1 correctness", lod1_correctness},
        {"rasterization convergence", rasterization_convergence},
        {"tiling round-trip", tiling_round_trip},
        {"road/land-use overlap", overlap_invariant},
        {"end-to-end sample", end_to_end},
    };
    int failed = 0;
    int number = 0;
    for (const auto& [name, check]: criteria)
    {
        ++number;
        Outcome o;
        try
        {
            o = check();
        }
        catch (const std::exception& e)
        {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        failed += o.pass ? 0 : 1;
        fmt::print("{} {:>2} {}: {}\n", o.pass ? "PASS" : "FAIL", number, name, o.detail);
        std::fflush(stdout);
    }
    fmt::print("{} of {} criteria passed\n", number - failed, number);
    return failed == 0 ? 0 : 1;
}
