#include "support.hpp"

#include "worldgen/error.hpp"
#include "worldgen/ingest.hpp"
#include "worldgen/io.hpp"
#include "worldgen/parallel.hpp"
#include "worldgen/pipeline.hpp"
#include "worldgen/sample.hpp"

#include <doctest.h>

#include <fstream>
#include <map>

using namespace worldgen;
using namespace worldgen::pipeline;
using nlohmann::json;

namespace
{
    /// Sample dataset written once per test binary run.
    const std::filesystem::path& sample_config()
    {
        static const std::filesystem::path path = sample::write_sample_dataset(testing::scratch_dir("pipeline_sample"));
        return path;
    }

    json sample_json() { return json::parse(io::read_text(sample_config())); }

    PipelineConfig config_with_output(json j, const std::string& name)
    {
        j["output_dir"] = (testing::scratch_dir(name) / "out").string();
        return parse_config(j, sample_config().parent_path());
    }

    std::map<std::string, std::string> checksums(const Manifest& m)
    {
        std::map<std::string, std::string> out;
        for (const auto& f: m.files)
            out[f.path] = f.sha256;
        return out;
    }

    std::string config_error(const json& j)
    {
        try
        {
            parse_config(j, ".");
        }
        catch (const ConfigError& e)
        {
            return e.what();
        }
        return {};
    }
} // namespace

TEST_CASE("config parsing rejects bad documents with the offending key")
{
    const json base = sample_json();
    CHECK_NOTHROW(parse_config(base, "."));

    json j = base;
    j["version"] = 2;
    CHECK(config_error(j).find("version") != std::string::npos);

    j = base;
    j["tile_sise"] = 505;
    CHECK(config_error(j).find("tile_sise") != std::string::npos);

    j = base;
    j["roads"]["widths"].erase("path");
    CHECK(config_error(j).find("roads.widths") != std::string::npos);

    j = base;
    j["landuse"]["classes"]["lake"] = "swamp";
    CHECK(config_error(j).find("swamp") != std::string::npos);

    j = base;
    j["grid"]["width"] = 10;
    CHECK_FALSE(config_error(j).empty());

    j = base;
    j["inputs"] = json::object();
    CHECK_FALSE(config_error(j).empty());

    j = base;
    j["buildings"]["statistic"] = "median";
    CHECK(config_error(j).find("statistic") != std::string::npos);
}

TEST_CASE("relative paths resolve against the config directory")
{
    const PipelineConfig c = load_config(sample_config());
    CHECK(c.inputs.elevation.size() == 2);
    CHECK(c.inputs.elevation.front().parent_path() == sample_config().parent_path());
    CHECK(c.output_dir == sample_config().parent_path() / "out");
    CHECK(c.seed == sample::default_seed);
}

TEST_CASE("an elevation-only run writes one height tile set")
{
    const auto dir = testing::scratch_dir("elevation_only");
    RasterGrid g(GridSpec {1000, 2000, 2, 30, 20});
    for (std::size_t r = 0; r < g.height(); ++r)
        for (std::size_t c = 0; c < g.width(); ++c)
            g.at(c, r) = 50.0 + static_cast<double>(c) - 0.5 * static_cast<double>(r);
    io::write_text(dir / "dem.asc", ingest::write_esri_ascii_grid(g));
    const json j {{"version", 1}, {"inputs", {{"elevation", {"dem.asc"}}}}, {"tile_size", 16}};
    const Manifest m = run_pipeline(parse_config(j, dir));
    CHECK(m.status == "complete");
    REQUIRE(m.tile_sets.size() == 1);
    CHECK(m.tile_sets[0].files.size() == 12); // 60 x 40 cells at the default 1 m spacing
    CHECK(std::filesystem::exists(dir / "out" / manifest_name));
    const ValidationReport v = cmd_validate(dir / "out");
    CHECK(v.ok());
    CHECK(v.checks > 0);
}

TEST_CASE("sample run is complete, valid and deterministic across thread counts")
{
    const json j = sample_json();
    const PipelineConfig first = config_with_output(j, "det_a");
    set_thread_count(1);
    const Manifest a = run_pipeline(first);
    set_thread_count(4);
    const Manifest b = run_pipeline(config_with_output(j, "det_b"));
    set_thread_count(0);
    CHECK(a.status == "complete");
    CHECK(a.overlap_violations == 0);
    CHECK(a.tile_sets.size() == 7);
    CHECK(a.files.size() > 50);
    CHECK(checksums(a) == checksums(b));
    const Manifest reread = Manifest::from_json(json::parse(io::read_text(first.output_dir / manifest_name)));
    CHECK(checksums(reread) == checksums(a));
    CHECK(reread.tile_sets.size() == a.tile_sets.size());
}

TEST_CASE("validation names a corrupted file and a missing tile")
{
    const PipelineConfig c = config_with_output(sample_json(), "corrupt");
    const Manifest m = run_pipeline(c);
    REQUIRE(cmd_validate(c.output_dir).ok());

    const std::string victim = m.files.front().path;
    auto bytes = io::read_bytes(c.output_dir / victim);
    bytes[bytes.size() / 2] ^= 0x01;
    io::write_bytes(c.output_dir / victim, bytes);
    ValidationReport v = cmd_validate(c.output_dir);
    REQUIRE_FALSE(v.ok());
    CHECK(v.failures.front().find(victim) != std::string::npos);

    const std::string tile = m.tile_sets.back().files.back().path;
    std::filesystem::remove(c.output_dir / tile);
    v = cmd_validate(c.output_dir);
    bool named = false;
    for (const auto& f: v.failures)
        named = named || f.find(tile) != std::string::npos;
    CHECK(named);
}

TEST_CASE("a failing stage leaves a partial manifest naming the stage")
{
    json j = sample_json();
    j["landuse"]["classes"].erase("lake");
    j["landuse"]["classes"].erase("river");
    const PipelineConfig c = config_with_output(j, "failing");
    try
    {
        run_pipeline(c);
        FAIL("expected the land-use stage to fail");
    }
    catch (const ConfigError& e)
    {
        const std::string what = e.what();
        CHECK(what.find("lake") != std::string::npos);
        CHECK(what.find("river") != std::string::npos);
    }
    const Manifest partial = Manifest::from_json(json::parse(io::read_text(c.output_dir / manifest_name)));
    CHECK(partial.status == "failed");
    CHECK(partial.failed_stage == "landuse");
    CHECK_FALSE(partial.files.empty());
    CHECK_FALSE(cmd_validate(c.output_dir).ok());
}

TEST_CASE("road and land-use masks never overlap after subtraction")
{
    const PipelineConfig c = load_config(sample_config());
    const GridSpec grid {0, 0, 2, 1000, 500};
    const RasterGrid road = road_mask(load_layer(*c.inputs.roads, LayerKind::polyline, c), c.roads, grid);
    const auto masks = landuse_masks(load_layer(*c.inputs.landuse, LayerKind::polygon, c), c.landuse, grid, &road);
    CHECK(masks.size() == landuse_classes.size());
    CHECK(overlap_violations(road, masks) == 0);
    const auto unsubtracted = landuse_masks(load_layer(*c.inputs.landuse, LayerKind::polygon, c), c.landuse, grid, nullptr);
    CHECK(overlap_violations(road, unsubtracted) > 0);
}

TEST_CASE("bench requires streamlines and enough of them")
{
    PipelineConfig c = config_with_output(sample_json(), "bench");
    const std::size_t counts[] = {5, 20};
    const auto report = cmd_bench(c, counts, 2, c.output_dir.parent_path() / "bench.json");
    CHECK(report.rows.size() == 4);
    CHECK(std::filesystem::exists(c.output_dir.parent_path() / "bench.json"));
    const std::size_t too_many[] = {100000};
    CHECK_THROWS_AS(cmd_bench(c, too_many, 1, c.output_dir.parent_path() / "b2.json"), ConfigError);
    c.inputs.streamlines.reset();
    CHECK_THROWS_AS(cmd_bench(c, counts, 1, c.output_dir.parent_path() / "b3.json"), ConfigError);
}
