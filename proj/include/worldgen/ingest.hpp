#pragma once

#include "worldgen/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace worldgen::ingest
{
    struct GeoJsonOptions
    {
        std::string class_key {"class"};
        std::string value_key {"value"};
        std::string id_key {"id"};
        /// Used when a feature has no class property. Empty means the property is mandatory.
        std::string default_class;
        /// Used when the collection carries no legacy "crs" member.
        std::string default_crs;
    };

    /// Reads a GeoJSON FeatureCollection. Multi-geometries are exploded into one feature per part
    /// (ids suffixed "#k"). Self-intersecting rings are skipped and reported in VectorLayer::warnings;
    /// structural violations (unclosed ring, too few vertices, non-finite coordinates) throw GeometryError.
    VectorLayer parse_geojson_layer(std::string_view text, LayerKind expected_kind, const GeoJsonOptions& options = {});

    /// ESRI ASCII grid. The first data row is the northernmost and lands in the top row of the
    /// south-up RasterGrid.
    RasterGrid parse_esri_ascii_grid(std::string_view text);

    /// Inverse of parse_esri_ascii_grid; values written in shortest round-trip form.
    std::string write_esri_ascii_grid(const RasterGrid& grid);

    enum class PointFormat
    {
        xyz_text,
        las,
    };

    PointCloud parse_point_cloud(std::span<const std::uint8_t> bytes, PointFormat format);
    PointCloud parse_point_cloud(std::string_view bytes, PointFormat format);

    struct LasEncoding
    {
        Vec3 scale {0.01, 0.01, 0.01};
        Vec3 offset {};
    };

    /// LAS 1.2, point data record format 0. Coordinates are rounded to the integer grid of `encoding`.
    std::vector<std::uint8_t> encode_las(const PointCloud& cloud, const LasEncoding& encoding = {});

    /// Streamline text: one "x y z [scalar]" point per line, blank lines separate streamlines, '#' starts a comment.
    std::vector<Streamline> parse_streamlines_text(std::string_view text);
    std::string write_streamlines_text(std::span<const Streamline> lines);

    /// Volume descriptor: JSON with "dims", "origin", "cell_size" and "data" naming a raw little-endian
    /// float32 file relative to the descriptor.
    Volume3D read_volume(const std::filesystem::path& descriptor);
    void write_volume(const std::filesystem::path& descriptor, const Volume3D& volume);
} // namespace worldgen::ingest
