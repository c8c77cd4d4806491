#include "worldgen/raster.hpp"

#include "worldgen/error.hpp"
#include "worldgen/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace worldgen::raster
{
    RoadClassWidths::RoadClassWidths(std::map<std::string, double> widths): widths_(std::move(widths))
    {
        if (widths_.size() != 4)
            throw ConfigError(fmt::format("road class widths must define exactly 4 classes, got {}", widths_.size()));
        for (const auto& [label, w]: widths_)
            if (!(w > 0.0) || !std::isfinite(w))
                throw ConfigError(fmt::format("road class '{}' has non-positive width {}", label, w));
    }

    double RoadClassWidths::width(const std::string& label) const
    {
        const auto it = widths_.find(label);
        if (it == widths_.end())
            throw ConfigError(fmt::format("unknown road class '{}'", label));
        return it->second;
    }

    // ---- rasterization ----------------------------------------------------------------------------------------------

    void paint_polygon(std::span<const Ring> rings, const GridSpec& spec, RasterGrid& target, double value)
    {
        Box2 box;
        for (const Ring& r: rings)
            for (const Vec2& p: r)
                box.extend(p);
        if (box.empty())
            return;

        const double sp = spec.cell_spacing;
        const auto row_lo = static_cast<long long>(std::floor((box.min.y - spec.origin_y) / sp - 0.5)) - 1;
        const auto row_hi = static_cast<long long>(std::ceil((box.max.y - spec.origin_y) / sp - 0.5)) + 1;
        const long long first_row = std::max<long long>(0, row_lo);
        const long long last_row = std::min<long long>(static_cast<long long>(spec.height) - 1, row_hi);
        const auto width = static_cast<long long>(spec.width);

        std::vector<double> crossings;
        for (long long row = first_row; row <= last_row; ++row)
        {
            const double cy = spec.center_y(static_cast<std::size_t>(row));
            crossings.clear();
            for (const Ring& ring: rings)
            {
                const std::size_t n = ring.size();
                for (std::size_t i = 0, j = n - 1; i < n; j = i++)
                {
                    const Vec2 a = ring[i];
                    const Vec2 b = ring[j];
                    if ((a.y > cy) != (b.y > cy))
                        crossings.push_back((b.x - a.x) * (cy - a.y) / (b.y - a.y) + a.x);
                }
            }
            std::sort(crossings.begin(), crossings.end());
            // A center cx is inside iff an odd number of crossings satisfy x <= cx, i.e. cx in [s0,s1) u [s2,s3) ...
            for (std::size_t k = 0; k + 1 < crossings.size(); k += 2)
            {
                const double lo = crossings[k];
                const double hi = crossings[k + 1];
                auto c = std::max<long long>(0, static_cast<long long>(std::floor((lo - spec.origin_x) / sp - 0.5)));
                while (c > 0 && spec.center_x(static_cast<std::size_t>(c - 1)) >= lo)
                    --c;
                for (; c < width; ++c)
                {
                    const double cx = spec.center_x(static_cast<std::size_t>(c));
                    if (cx < lo)
                        continue;
                    if (cx >= hi)
                        break;
                    target.at(static_cast<std::size_t>(c), static_cast<std::size_t>(row)) = value;
                }
            }
        }
    }

    RasterGrid rasterize_polygons_binary(const VectorLayer& layer, const GridSpec& spec)
    {
        if (!spec.valid())
            throw PreconditionError("invalid grid spec");
        if (layer.kind != LayerKind::polygon)
            throw KindError("rasterize_polygons_binary requires a polygon layer");
        RasterGrid out(spec, 0.0);
        for (const Feature& f: layer.features)
            paint_polygon(f.rings, spec, out, 1.0);
        return out;
    }

    RasterGrid rasterize_buffered_polylines(const VectorLayer& layer, const RoadClassWidths& widths, const GridSpec& spec)
    {
        if (!spec.valid())
            throw PreconditionError("invalid grid spec");
        if (layer.kind != LayerKind::polyline)
            throw KindError("rasterize_buffered_polylines requires a polyline layer");
        std::set<std::string> unknown;
        for (const Feature& f: layer.features)
            if (!widths.contains(f.class_label))
                unknown.insert(f.class_label);
        if (!unknown.empty())
            throw ConfigError(fmt::format("unknown road class '{}'", fmt::join(unknown, "', '")));

        RasterGrid out(spec, 0.0);
        const double sp = spec.cell_spacing;
        for (const Feature& f: layer.features)
        {
            const double half = 0.5 * widths.width(f.class_label);
            const double half_sq = half * half;
            for (std::size_t s = 0; s + 1 < f.vertices.size(); ++s)
            {
                const Vec2 a = f.vertices[s];
                const Vec2 b = f.vertices[s + 1];
                const double x0 = std::min(a.x, b.x) - half;
                const double x1 = std::max(a.x, b.x) + half;
                const double y0 = std::min(a.y, b.y) - half;
                const double y1 = std::max(a.y, b.y) + half;
                const auto c_lo = std::max<long long>(0, static_cast<long long>(std::floor((x0 - spec.origin_x) / sp - 0.5)));
                const auto c_hi = std::min<long long>(static_cast<long long>(spec.width) - 1,
                                                      static_cast<long long>(std::ceil((x1 - spec.origin_x) / sp - 0.5)));
                const auto r_lo = std::max<long long>(0, static_cast<long long>(std::floor((y0 - spec.origin_y) / sp - 0.5)));
                const auto r_hi = std::min<long long>(static_cast<long long>(spec.height) - 1,
                                                      static_cast<long long>(std::ceil((y1 - spec.origin_y) / sp - 0.5)));
                for (long long r = r_lo; r <= r_hi; ++r)
                {
                    const double cy = spec.center_y(static_cast<std::size_t>(r));
                    for (long long c = c_lo; c <= c_hi; ++c)
                    {
                        const Vec2 center {spec.center_x(static_cast<std::size_t>(c)), cy};
                        if (point_segment_distance_sq(center, a, b) <= half_sq)
                            out.at(static_cast<std::size_t>(c), static_cast<std::size_t>(r)) = 1.0;
                    }
                }
            }
        }
        return out;
    }

    // ---- mosaic -----------------------------------------------------------------------------------------------------

    RasterGrid mosaic(std::span<const RasterGrid> grids)
    {
        if (grids.empty())
            throw PreconditionError("mosaic needs at least one grid");
        const RasterGrid& first = grids.front();
        first.check();
        const double sp = first.spec.cell_spacing;

        struct Placement
        {
            long long col;
            long long row;
        };
        std::vector<Placement> placements;
        long long min_col = 0, min_row = 0, max_col = 0, max_row = 0;
        for (std::size_t i = 0; i < grids.size(); ++i)
        {
            const RasterGrid& g = grids[i];
            g.check();
            if (std::abs(g.spec.cell_spacing - sp) > 1e-9 * sp)
                throw PreconditionError(
                    fmt::format("mosaic: grid {} has cell spacing {}, expected {}", i, g.spec.cell_spacing, sp));
            const double fx = (g.spec.origin_x - first.spec.origin_x) / sp;
            const double fy = (g.spec.origin_y - first.spec.origin_y) / sp;
            if (std::abs(fx - std::round(fx)) > 1e-6 || std::abs(fy - std::round(fy)) > 1e-6)
                throw PreconditionError(fmt::format("mosaic: grid {} origin is not a whole number of cells from grid 0", i));
            const Placement p {std::llround(fx), std::llround(fy)};
            placements.push_back(p);
            min_col = std::min(min_col, p.col);
            min_row = std::min(min_row, p.row);
            max_col = std::max(max_col, p.col + static_cast<long long>(g.width()));
            max_row = std::max(max_row, p.row + static_cast<long long>(g.height()));
        }

        GridSpec spec {first.spec.origin_x + static_cast<double>(min_col) * sp,
                       first.spec.origin_y + static_cast<double>(min_row) * sp, sp,
                       static_cast<std::size_t>(max_col - min_col), static_cast<std::size_t>(max_row - min_row)};
        RasterGrid out(spec, first.nodata, first.nodata);
        for (std::size_t i = 0; i < grids.size(); ++i)
        {
            const RasterGrid& g = grids[i];
            const auto dc = static_cast<std::size_t>(placements[i].col - min_col);
            const auto dr = static_cast<std::size_t>(placements[i].row - min_row);
            for (std::size_t r = 0; r < g.height(); ++r)
                for (std::size_t c = 0; c < g.width(); ++c)
                {
                    const double v = g.at(c, r);
                    if (g.is_nodata(v))
                        continue;
                    double& dst = out.at(c + dc, r + dr);
                    if (out.is_nodata(dst))
                        dst = v;
                    else if (std::abs(dst - v) > 1e-6)
                        throw PreconditionError(fmt::format("mosaic: conflicting overlap at cell ({}, {}): {} vs {}",
                                                            c + dc, r + dr, dst, v));
                }
        }
        return out;
    }

    // ---- resampling -------------------------------------------------------------------------------------------------

    namespace
    {
        /// fx, fy are continuous cell indices where integers are cell centers.
        double sample_index(const RasterGrid& grid, double fx, double fy, ResampleMethod method)
        {
            const auto w = static_cast<double>(grid.width());
            const auto h = static_cast<double>(grid.height());
            constexpr double snap = 1e-9;
            if (fx < -0.5 - snap || fy < -0.5 - snap || fx > w - 0.5 + snap || fy > h - 0.5 + snap)
                return grid.nodata;
            if (std::abs(fx - std::round(fx)) < snap)
                fx = std::round(fx);
            if (std::abs(fy - std::round(fy)) < snap)
                fy = std::round(fy);
            fx = std::clamp(fx, 0.0, w - 1.0);
            fy = std::clamp(fy, 0.0, h - 1.0);

            if (method == ResampleMethod::nearest)
            {
                const auto c = static_cast<std::size_t>(std::min(std::floor(fx + 0.5), w - 1.0));
                const auto r = static_cast<std::size_t>(std::min(std::floor(fy + 0.5), h - 1.0));
                return grid.at(c, r);
            }

            auto c0 = static_cast<std::size_t>(std::floor(fx));
            auto r0 = static_cast<std::size_t>(std::floor(fy));
            if (c0 + 1 >= grid.width() && c0 > 0)
                c0 = grid.width() - (grid.width() > 1 ? 2 : 1);
            if (r0 + 1 >= grid.height() && r0 > 0)
                r0 = grid.height() - (grid.height() > 1 ? 2 : 1);
            const double tx = fx - static_cast<double>(c0);
            const double ty = fy - static_cast<double>(r0);
            const std::size_t c1 = std::min(c0 + 1, grid.width() - 1);
            const std::size_t r1 = std::min(r0 + 1, grid.height() - 1);

            const double weights[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
            const std::size_t cols[4] = {c0, c1, c0, c1};
            const std::size_t rows[4] = {r0, r0, r1, r1};
            double acc = 0.0;
            for (int k = 0; k < 4; ++k)
            {
                if (weights[k] == 0.0)
                    continue;
                const double v = grid.at(cols[k], rows[k]);
                if (grid.is_nodata(v))
                    return grid.nodata;
                acc += weights[k] * v;
            }
            return acc;
        }
    } // namespace

    double sample(const RasterGrid& grid, double x, double y, ResampleMethod method)
    {
        const double sp = grid.spec.cell_spacing;
        return sample_index(grid, (x - grid.spec.origin_x) / sp - 0.5, (y - grid.spec.origin_y) / sp - 0.5, method);
    }

    RasterGrid resample_to(const RasterGrid& grid, const GridSpec& target, ResampleMethod method)
    {
        grid.check();
        if (!target.valid())
            throw PreconditionError("resample: invalid target grid spec");
        const double sp = grid.spec.cell_spacing;
        const double ratio = target.cell_spacing / sp;
        const double off_x = (target.origin_x - grid.spec.origin_x) / sp;
        const double off_y = (target.origin_y - grid.spec.origin_y) / sp;
        RasterGrid out(target, grid.nodata, grid.nodata);
        parallel_for(target.height, [&](std::size_t r) {
            const double fy = off_y + (static_cast<double>(r) + 0.5) * ratio - 0.5;
            for (std::size_t c = 0; c < target.width; ++c)
            {
                const double fx = off_x + (static_cast<double>(c) + 0.5) * ratio - 0.5;
                out.at(c, r) = sample_index(grid, fx, fy, method);
            }
        });
        return out;
    }

    RasterGrid resample(const RasterGrid& grid, double new_spacing, ResampleMethod method)
    {
        if (!(new_spacing > 0.0))
            throw PreconditionError("resample: new spacing must be positive");
        grid.check();
        const double extent_x = static_cast<double>(grid.width()) * grid.spec.cell_spacing;
        const double extent_y = static_cast<double>(grid.height()) * grid.spec.cell_spacing;
        GridSpec target {grid.spec.origin_x, grid.spec.origin_y, new_spacing,
                         static_cast<std::size_t>(std::max(1.0, std::ceil(extent_x / new_spacing - 1e-9))),
                         static_cast<std::size_t>(std::max(1.0, std::ceil(extent_y / new_spacing - 1e-9)))};
        return resample_to(grid, target, method);
    }

    // ---- convolution ------------------------------------------------------------------------------------------------

    std::vector<double> gaussian_kernel(double sigma, int radius)
    {
        if (!(sigma > 0.0))
            throw PreconditionError("gaussian sigma must be positive");
        if (radius < 1)
            throw PreconditionError("gaussian radius must be at least 1");
        const int size = 2 * radius + 1;
        std::vector<double> k(static_cast<std::size_t>(size * size));
        double sum = 0.0;
        for (int j = -radius; j <= radius; ++j)
            for (int i = -radius; i <= radius; ++i)
            {
                const double w = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
                k[static_cast<std::size_t>((j + radius) * size + (i + radius))] = w;
                sum += w;
            }
        for (double& w: k)
            w /= sum;
        return k;
    }

    int default_radius(double sigma) { return std::max(1, static_cast<int>(std::ceil(3.0 * sigma))); }

    namespace
    {
        /// Symmetric reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
        std::size_t reflect(long long i, long long n) noexcept
        {
            const long long period = 2 * n;
            i %= period;
            if (i < 0)
                i += period;
            if (i >= n)
                i = period - 1 - i;
            return static_cast<std::size_t>(i);
        }
    } // namespace

    namespace
    {
        /// The square kernel is the outer product of this normalized 1D kernel.
        std::vector<double> gaussian_kernel_1d(double sigma, int radius)
        {
            std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
            double sum = 0.0;
            for (int i = -radius; i <= radius; ++i)
                sum += k[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
            for (double& w: k)
                w /= sum;
            return k;
        }

        RasterGrid convolve_separable(const RasterGrid& grid, double sigma, int radius)
        {
            const std::vector<double> k = gaussian_kernel_1d(sigma, radius);
            const double* kc = k.data() + radius;
            const auto w = static_cast<long long>(grid.width());
            const auto h = static_cast<long long>(grid.height());
            RasterGrid tmp(grid.spec, 0.0, grid.nodata);
            parallel_for(grid.height(), [&](std::size_t row) {
                for (long long c = 0; c < w; ++c)
                {
                    double acc = 0.0;
                    for (int i = -radius; i <= radius; ++i)
                        acc += kc[i] * grid.at(reflect(c + i, w), row);
                    tmp.at(static_cast<std::size_t>(c), row) = acc;
                }
            });
            RasterGrid out(grid.spec, 0.0, grid.nodata);
            parallel_for(grid.height(), [&](std::size_t row) {
                const auto r = static_cast<long long>(row);
                double* dst = out.values.data() + out.index(0, row);
                for (int j = -radius; j <= radius; ++j)
                {
                    const double* src = tmp.values.data() + tmp.index(0, reflect(r + j, h));
                    for (long long c = 0; c < w; ++c)
                        dst[c] += kc[j] * src[c];
                }
            });
            return out;
        }
    } // namespace

    RasterGrid gaussian_convolve(const RasterGrid& grid, double sigma, int radius)
    {
        grid.check();
        if (!(sigma > 0.0))
            throw PreconditionError("gaussian sigma must be positive");
        if (radius < 1)
            throw PreconditionError("gaussian radius must be at least 1");
        if (std::none_of(grid.values.begin(), grid.values.end(), [&](double v) { return grid.is_nodata(v); }))
            return convolve_separable(grid, sigma, radius);
        const std::vector<double> kernel = gaussian_kernel(sigma, radius);
        const int size = 2 * radius + 1;
        const auto w = static_cast<long long>(grid.width());
        const auto h = static_cast<long long>(grid.height());

        RasterGrid out(grid.spec, 0.0, grid.nodata);
        parallel_for(grid.height(), [&](std::size_t row) {
            const auto r = static_cast<long long>(row);
            for (long long c = 0; c < w; ++c)
            {
                const double center = grid.at(static_cast<std::size_t>(c), row);
                if (grid.is_nodata(center))
                {
                    out.at(static_cast<std::size_t>(c), row) = grid.nodata;
                    continue;
                }
                double acc = 0.0;
                double weight = 0.0;
                bool excluded = false;
                for (int j = -radius; j <= radius; ++j)
                {
                    const std::size_t rr = reflect(r + j, h);
                    const double* krow = kernel.data() + static_cast<std::size_t>((j + radius) * size + radius);
                    for (int i = -radius; i <= radius; ++i)
                    {
                        const double v = grid.at(reflect(c + i, w), rr);
                        if (grid.is_nodata(v))
                        {
                            excluded = true;
                            continue;
                        }
                        acc += krow[i] * v;
                        weight += krow[i];
                    }
                }
                out.at(static_cast<std::size_t>(c), row) = excluded ? acc / weight : acc;
            }
        });
        return out;
    }

    // ---- arithmetic -------------------------------------------------------------------------------------------------

    RasterGrid subtract_clamp(const RasterGrid& a, const RasterGrid& b)
    {
        a.check();
        b.check();
        if (!(a.spec == b.spec))
            throw PreconditionError("subtract_clamp: grid specs differ");
        RasterGrid out(a.spec, 0.0, a.nodata);
        for (std::size_t i = 0; i < a.values.size(); ++i)
        {
            const double va = a.values[i];
            const double vb = b.values[i];
            out.values[i] = (a.is_nodata(va) || b.is_nodata(vb)) ? a.nodata : std::max(0.0, va - vb);
        }
        return out;
    }

    Normalized normalize_minmax(const RasterGrid& grid)
    {
        grid.check();
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (double v: grid.values)
        {
            if (grid.is_nodata(v) || !std::isfinite(v))
                continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo > hi)
            throw PreconditionError("normalize_minmax: grid has no finite cells");

        Normalized result {RasterGrid(grid.spec, 0.0, grid.nodata), lo, hi, lo == hi};
        const double range = hi - lo;
        for (std::size_t i = 0; i < grid.values.size(); ++i)
        {
            const double v = grid.values[i];
            if (grid.is_nodata(v) || !std::isfinite(v))
                result.grid.values[i] = grid.nodata;
            else
                result.grid.values[i] = result.degenerate ? 0.0 : (v - lo) / range;
        }
        return result;
    }
} // namespace worldgen::raster
