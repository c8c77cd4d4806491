#pragma once

#include "worldgen/geometry.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace worldgen
{
    inline constexpr double default_nodata = -9999.0;

    /// Geometry of a uniform square-cell grid. Row 0 is the southernmost row.
    struct GridSpec
    {
        double origin_x {}; ///< lower-left corner of cell (0,0), meters
        double origin_y {};
        double cell_spacing {1.0};
        std::size_t width {1};
        std::size_t height {1};

        bool valid() const noexcept { return cell_spacing > 0.0 && width >= 1 && height >= 1; }
        double max_x() const noexcept { return origin_x + static_cast<double>(width) * cell_spacing; }
        double max_y() const noexcept { return origin_y + static_cast<double>(height) * cell_spacing; }
        double center_x(std::size_t col) const noexcept { return origin_x + (static_cast<double>(col) + 0.5) * cell_spacing; }
        double center_y(std::size_t row) const noexcept { return origin_y + (static_cast<double>(row) + 0.5) * cell_spacing; }

        friend bool operator==(const GridSpec&, const GridSpec&) = default;
    };

    /// Row-major scalar grid, south-up. The universal intermediate for heights, masks and packed data.
    struct RasterGrid
    {
        GridSpec spec;
        std::vector<double> values;
        double nodata {default_nodata};

        RasterGrid() = default;
        explicit RasterGrid(const GridSpec& s, double fill = 0.0, double nodata_value = default_nodata);

        std::size_t width() const noexcept { return spec.width; }
        std::size_t height() const noexcept { return spec.height; }
        std::size_t index(std::size_t col, std::size_t row) const noexcept { return row * spec.width + col; }
        double& at(std::size_t col, std::size_t row) noexcept { return values[index(col, row)]; }
        double at(std::size_t col, std::size_t row) const noexcept { return values[index(col, row)]; }

        bool is_nodata(double v) const noexcept { return std::isnan(v) || v == nodata; }

        /// Throws PreconditionError when the spec or the value count is inconsistent.
        void check() const;
    };

    enum class LayerKind
    {
        polygon,
        polyline,
    };

    /// One simple geometry with its attributes. Polygons use `rings` (exterior first), polylines use `vertices`.
    struct Feature
    {
        std::vector<Ring> rings;
        std::vector<Vec2> vertices;
        std::string class_label;
        std::optional<double> value;
        std::string feature_id;
    };

    struct VectorLayer
    {
        std::vector<Feature> features;
        std::string crs_id;
        LayerKind kind {LayerKind::polygon};
        /// Features dropped at ingest (e.g. self-intersecting rings), one message each.
        std::vector<std::string> warnings;
    };

    struct PointCloud
    {
        std::vector<Vec3> points;
        /// Empty, or one LAS classification byte per point.
        std::vector<std::uint8_t> classification;
    };

    /// Ordered 3D polyline with an optional per-point scalar (empty or one value per point).
    struct Streamline
    {
        std::vector<Vec3f> points;
        std::vector<float> scalar;

        friend bool operator==(const Streamline&, const Streamline&) = default;
    };

    /// Scalar volume, x-fastest then y then z.
    struct Volume3D
    {
        std::size_t nx {1};
        std::size_t ny {1};
        std::size_t nz {1};
        Vec3 origin {};
        Vec3 cell_size {1.0, 1.0, 1.0};
        std::vector<float> values;

        Volume3D() = default;
        Volume3D(std::size_t x, std::size_t y, std::size_t z, float fill = 0.0f);

        std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept { return (z * ny + y) * nx + x; }
        float& at(std::size_t x, std::size_t y, std::size_t z) noexcept { return values[index(x, y, z)]; }
        float at(std::size_t x, std::size_t y, std::size_t z) const noexcept { return values[index(x, y, z)]; }

        void check() const;
    };
} // namespace worldgen
