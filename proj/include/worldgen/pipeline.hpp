#pragma once

#include "worldgen/buildings.hpp"
#include "worldgen/datatex.hpp"
#include "worldgen/raster.hpp"
#include "worldgen/tiler.hpp"
#include "worldgen/tubes.hpp"
#include "worldgen/types.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace worldgen::pipeline
{
    inline constexpr int config_version = 1;
    inline constexpr int manifest_version = 1;
    inline constexpr const char* manifest_name = "manifest.json";

    /// Target land-use classes; every one gets a mask tile set.
    inline const std::array<std::string, 5> landuse_classes {"water", "forest", "farm", "urban", "open"};

    struct InputPaths
    {
        std::vector<std::filesystem::path> elevation; ///< ESRI ASCII grids, mosaicked
        std::optional<std::filesystem::path> buildings;
        std::optional<std::filesystem::path> roads;
        std::optional<std::filesystem::path> landuse;
        std::optional<std::filesystem::path> pointcloud; ///< .las or .xyz
        std::optional<std::filesystem::path> isolines;
        std::optional<std::filesystem::path> volume;      ///< volume descriptor JSON
        std::optional<std::filesystem::path> streamlines; ///< streamline text

        bool any() const noexcept;
    };

    struct GridConfig
    {
        double cell_spacing {1.0};
        /// Explicit placement; when absent the grid covers the elevation mosaic or, failing that, the vector layers.
        std::optional<std::array<double, 2>> origin;
        std::optional<std::size_t> width;
        std::optional<std::size_t> height;
    };

    struct RoadConfig
    {
        std::map<std::string, std::string> classes; ///< source label -> road class
        std::map<std::string, double> widths;       ///< road class -> width in meters
        double sigma {1.0};
    };

    struct LanduseConfig
    {
        std::map<std::string, std::string> classes; ///< source label -> one of landuse_classes
        double sigma {2.0};
    };

    struct BuildingConfig
    {
        buildings::HeightOptions height;
        double terrain_sink {buildings::default_terrain_sink};
    };

    struct VolumeConfig
    {
        std::optional<std::array<std::size_t, 2>> tiles;
        std::size_t particles {1000};
        double particle_threshold {0.0};
    };

    struct StreamlineConfig
    {
        std::size_t cap_vertices {tubes::default_cap_vertices};
        double radius {tubes::default_radius};
        std::size_t tube_sample {10}; ///< lines meshed into the reference tube OBJ
    };

    struct PipelineConfig
    {
        InputPaths inputs;
        GridConfig grid;
        std::size_t tile_size {tiler::default_tile_size};
        std::string class_key {"class"};
        std::string value_key {"value"};
        std::string id_key {"id"};
        RoadConfig roads;
        LanduseConfig landuse;
        BuildingConfig buildings;
        std::vector<datatex::ColorStop> colormap;
        VolumeConfig volume;
        StreamlineConfig streamlines;
        std::filesystem::path output_dir;
        std::uint64_t seed {0};
    };

    /// Relative paths are resolved against base_dir. Throws ConfigError naming the offending key.
    PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
    PipelineConfig load_config(const std::filesystem::path& path);

    /// Blue-to-red ramp used when the config has no colormap.
    std::vector<datatex::ColorStop> default_colormap();

    struct FileEntry
    {
        std::string path; ///< relative to the output directory
        std::string role;
        std::string format;
        nlohmann::json quantization; ///< null when not quantized
        nlohmann::json layout;       ///< null when not applicable
        std::string sha256;
        std::size_t bytes {};
    };

    struct StageTiming
    {
        std::string stage;
        double seconds {};
    };

    struct Manifest
    {
        std::string status {"complete"}; ///< "complete" or "failed"
        std::string failed_stage;
        std::string error;
        std::uint64_t seed {};
        std::vector<FileEntry> files;
        std::vector<tiler::TileSetRecord> tile_sets;
        std::vector<std::string> warnings;
        std::vector<StageTiming> timings;
        std::size_t overlap_violations {};

        nlohmann::json to_json() const;
        static Manifest from_json(const nlohmann::json& j);
    };

    VectorLayer load_layer(const std::filesystem::path& path, LayerKind kind, const PipelineConfig& config);

    /// Relabels roads by config.roads.classes and buffers them. Throws ConfigError listing unmapped labels.
    RasterGrid road_mask(const VectorLayer& roads, const RoadConfig& config, const GridSpec& grid);

    /// Binary mask per land-use class with the road mask subtracted (when given), before any smoothing.
    /// Throws ConfigError listing unmapped labels or unknown target classes.
    std::map<std::string, RasterGrid> landuse_masks(const VectorLayer& landuse, const LanduseConfig& config,
                                                    const GridSpec& grid, const RasterGrid* road);

    /// Cells where road + some land-use mask exceeds 1.
    std::size_t overlap_violations(const RasterGrid& road, const std::map<std::string, RasterGrid>& masks);

    /// Runs every stage whose input is present, in the order terrain, roads, land-use, buildings, isolines,
    /// volume, streamlines, and writes manifest.json. On failure a partial manifest (status "failed") is
    /// written before the exception propagates.
    Manifest run_pipeline(const PipelineConfig& config);

    /// Benchmarks tube meshing against segment instancing on the configured streamlines and writes the
    /// report as JSON. Throws ConfigError without a streamline input.
    tubes::BenchReport cmd_bench(const PipelineConfig& config, std::span<const std::size_t> counts, std::size_t runs,
                                 const std::filesystem::path& report_path);

    struct ValidationReport
    {
        std::size_t checks {};
        std::vector<std::string> failures;

        bool ok() const noexcept { return failures.empty(); }
    };

    /// Re-reads every output listed in the manifest: checksums, dense tile rectangles, dequantized bounds
    /// and mesh manifoldness.
    ValidationReport cmd_validate(const std::filesystem::path& out_dir);
} // namespace worldgen::pipeline
