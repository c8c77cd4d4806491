#pragma once

#include "worldgen/types.hpp"

#include <map>
#include <span>
#include <string>

namespace worldgen::raster
{
    /// Road class label -> buffer width in meters. Exactly four classes, every width positive.
    class RoadClassWidths
    {
    public:
        explicit RoadClassWidths(std::map<std::string, double> widths);

        double width(const std::string& label) const;
        bool contains(const std::string& label) const { return widths_.contains(label); }
        const std::map<std::string, double>& entries() const noexcept { return widths_; }

    private:
        std::map<std::string, double> widths_;
    };

    /// Binary mask: 1 where the cell center lies inside any feature (even-odd rule per feature), else 0.
    RasterGrid rasterize_polygons_binary(const VectorLayer& layer, const GridSpec& spec);

    /// Same sampling rule for a single feature's rings; used by rasterization and isoline packing.
    void paint_polygon(std::span<const Ring> rings, const GridSpec& spec, RasterGrid& target, double value);

    /// Binary corridor mask: 1 where a cell center lies within widths[class]/2 of a centerline segment.
    /// Point-to-segment distance gives round caps and joins, i.e. buffer-then-dissolve at raster resolution.
    RasterGrid rasterize_buffered_polylines(const VectorLayer& layer, const RoadClassWidths& widths, const GridSpec& spec);

    /// Union of same-spacing grids whose origins differ by whole cells. Overlapping finite cells must agree within 1e-6.
    RasterGrid mosaic(std::span<const RasterGrid> grids);

    enum class ResampleMethod
    {
        bilinear,
        nearest,
    };

    /// Bilinear/nearest lookup at a world position using cell-center sample points with edge clamping.
    /// Returns nodata when any contributing (nonzero-weight) cell is nodata or the point is off the grid.
    double sample(const RasterGrid& grid, double x, double y, ResampleMethod method = ResampleMethod::bilinear);

    /// Resample onto an arbitrary target grid; target cells outside the source extent become nodata.
    RasterGrid resample_to(const RasterGrid& grid, const GridSpec& target, ResampleMethod method);

    /// Resample to a new spacing over the same extent (width = ceil(extent / new_spacing)).
    RasterGrid resample(const RasterGrid& grid, double new_spacing, ResampleMethod method);

    /// Normalized Gaussian kernel, (2*radius+1)^2 weights, row-major, summing to 1.
    std::vector<double> gaussian_kernel(double sigma, int radius);

    /// radius = ceil(3*sigma)
    int default_radius(double sigma);

    /// 2D Gaussian convolution with symmetric-reflect borders. Nodata cells are excluded and the remaining
    /// weights renormalized; nodata cells stay nodata.
    RasterGrid gaussian_convolve(const RasterGrid& grid, double sigma, int radius);

    /// max(0, a - b) per cell; nodata in either operand gives nodata.
    RasterGrid subtract_clamp(const RasterGrid& a, const RasterGrid& b);

    struct Normalized
    {
        RasterGrid grid;
        double min {};
        double max {};
        bool degenerate {false};
    };

    /// (v - min) / (max - min) over finite cells; a constant grid maps to 0 with the degenerate flag set.
    Normalized normalize_minmax(const RasterGrid& grid);
} // namespace worldgen::raster
