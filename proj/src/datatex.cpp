#include "worldgen/datatex.hpp"

#include "worldgen/error.hpp"
#include "worldgen/raster.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace worldgen::datatex
{
    using nlohmann::json;

    namespace
    {
        std::size_t payload_size(const Payload& p)
        {
            return std::visit(
                [](const auto& v) -> std::size_t {
                    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, U16Pair>)
                        return v.hi.size();
                    else
                        return v.size();
                },
                p);
        }

        std::uint16_t quantize_u16(double unit) noexcept
        {
            return static_cast<std::uint16_t>(std::clamp(std::nearbyint(unit * 65535.0), 0.0, 65535.0));
        }

        std::uint8_t round_channel(double v) noexcept
        {
            return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
        }
    } // namespace

    void DataTexture::check() const
    {
        if (payload_size(payload) != width * height)
            throw PreconditionError(fmt::format("texture payload has {} texels, expected {}x{}", payload_size(payload), width, height));
        if (const auto* pair = std::get_if<U16Pair>(&payload); pair && pair->lo.size() != pair->hi.size())
            throw PreconditionError("u16 pair planes differ in size");
    }

    double DataTexture::unit_value(std::size_t u, std::size_t v) const
    {
        const std::size_t i = v * width + u;
        if (const auto* p8 = std::get_if<std::vector<std::uint8_t>>(&payload))
            return (*p8)[i] / 255.0;
        if (const auto* p16 = std::get_if<std::vector<std::uint16_t>>(&payload))
            return (*p16)[i] / 65535.0;
        const auto& pair = std::get<U16Pair>(payload);
        return merge_f32(pair.hi[i], pair.lo[i]);
    }

    json sidecar(const DataTexture& tex)
    {
        json j;
        j["width"] = tex.width;
        j["height"] = tex.height;
        j["payload"] = std::visit(
            [](const auto& v) -> std::string {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::vector<std::uint8_t>>)
                    return "u8";
                else if constexpr (std::is_same_v<T, std::vector<std::uint16_t>>)
                    return "u16";
                else
                    return "u16_pair";
            },
            tex.payload);
        if (tex.normalization)
            j["normalization"] = {{"min", tex.normalization->min}, {"max", tex.normalization->max},
                                  {"degenerate", tex.normalization->degenerate}};
        else
            j["normalization"] = nullptr;
        if (const auto* z = std::get_if<ZFoldLayout>(&tex.layout))
            j["layout"] = {{"kind", "zfold"},
                           {"tiles_x", z->tiles_x},
                           {"tiles_y", z->tiles_y},
                           {"slice_dims", {z->nx, z->ny}},
                           {"nz", z->nz},
                           {"tile_order", "row-major: slice z at tile column z % tiles_x, tile row z / tiles_x"}};
        else if (const auto* s = std::get_if<StreamlineLayout>(&tex.layout))
            j["layout"] = {{"kind", "streamline"},
                           {"max_points", s->max_points},
                           {"line_count", s->line_count},
                           {"counts", s->counts},
                           {"padding_bits", fmt::format("0x{:08X}", padding_bits)},
                           {"planes", "hi = upper 16 bits, lo = lower 16 bits of IEEE-754 binary32"}};
        else
            j["layout"] = {{"kind", "plain"}, {"row_zero", "north"}};
        return j;
    }

    // ---- colormaps ---------------------------------------------------------------------------------------------------

    Colormap::Colormap(std::vector<ColorStop> stops): stops_(std::move(stops))
    {
        if (stops_.size() < 2)
            throw PreconditionError("colormap needs at least two stops");
        if (stops_.front().position != 0.0 || stops_.back().position != 1.0)
            throw PreconditionError("colormap stops must start at 0 and end at 1");
        for (std::size_t i = 1; i < stops_.size(); ++i)
            if (!(stops_[i].position > stops_[i - 1].position))
                throw PreconditionError("colormap stop positions must be strictly increasing");
    }

    std::array<std::uint8_t, 4> Colormap::lookup(double t) const noexcept
    {
        if (std::isnan(t))
            t = 0.0;
        t = std::clamp(t, 0.0, 1.0);
        std::size_t k = 1;
        while (k + 1 < stops_.size() && stops_[k].position < t)
            ++k;
        const ColorStop& a = stops_[k - 1];
        const ColorStop& b = stops_[k];
        const double f = (t - a.position) / (b.position - a.position);
        std::array<std::uint8_t, 4> out {};
        for (std::size_t c = 0; c < 4; ++c)
            out[c] = round_channel(a.rgba[c] + (static_cast<double>(b.rgba[c]) - a.rgba[c]) * f);
        return out;
    }

    IsolinePack pack_isolines(const VectorLayer& layer, const GridSpec& spec)
    {
        if (!spec.valid())
            throw PreconditionError("pack_isolines: invalid grid spec");
        struct Entry
        {
            double area;
            const Feature* feature;
        };
        std::vector<Entry> order;
        for (const Feature& f: layer.features)
        {
            if (!f.value || !std::isfinite(*f.value))
                throw PreconditionError(fmt::format("isoline feature '{}' has no finite value", f.feature_id));
            double area = 0.0;
            for (std::size_t r = 0; r < f.rings.size(); ++r)
                area += (r == 0 ? 1.0 : -1.0) * std::abs(signed_area(f.rings[r]));
            order.push_back({area, &f});
        }
        std::stable_sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
            if (a.area != b.area)
                return a.area > b.area;
            return a.feature->feature_id < b.feature->feature_id;
        });

        const double unset = std::numeric_limits<double>::quiet_NaN();
        RasterGrid painted(spec, unset, default_nodata);
        for (const Entry& e: order)
            raster::paint_polygon(e.feature->rings, spec, painted, *e.feature->value);

        IsolinePack pack;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (double v: painted.values)
            if (!std::isnan(v))
            {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        const bool any = lo <= hi;
        pack.min = any ? lo : 0.0;
        pack.max = any ? hi : 0.0;
        pack.degenerate = !any || lo == hi;

        std::vector<std::uint16_t> codes(spec.width * spec.height, 0);
        std::vector<std::uint8_t> mask(spec.width * spec.height, 0);
        for (std::size_t r = 0; r < spec.height; ++r)
            for (std::size_t c = 0; c < spec.width; ++c)
            {
                const double v = painted.at(c, r);
                if (std::isnan(v))
                    continue;
                const std::size_t i = (spec.height - 1 - r) * spec.width + c;
                mask[i] = 1;
                codes[i] = pack.degenerate ? 0 : quantize_u16((v - pack.min) / (pack.max - pack.min));
            }
        pack.values = {spec.width, spec.height, std::move(codes), Normalization {pack.min, pack.max, pack.degenerate}, {}};
        pack.mask = {spec.width, spec.height, std::move(mask), std::nullopt, {}};
        return pack;
    }

    RgbaImage apply_colormap(const DataTexture& tex, const Colormap& map, const DataTexture* mask)
    {
        tex.check();
        if (mask && (mask->width != tex.width || mask->height != tex.height))
            throw PreconditionError("apply_colormap: mask dimensions differ from texture");
        RgbaImage out {tex.width, tex.height, std::vector<std::uint8_t>(tex.width * tex.height * 4, 0)};
        for (std::size_t v = 0; v < tex.height; ++v)
            for (std::size_t u = 0; u < tex.width; ++u)
            {
                if (mask && mask->unit_value(u, v) == 0.0)
                    continue;
                const auto rgba = map.lookup(tex.unit_value(u, v));
                std::copy(rgba.begin(), rgba.end(), out.pixels.begin() + static_cast<std::ptrdiff_t>(4 * (v * tex.width + u)));
            }
        return out;
    }

    RgbaImage blend_over_base(const RgbaImage& base, const RgbaImage& data, double opacity)
    {
        if (base.width != data.width || base.height != data.height || base.pixels.size() != data.pixels.size())
            throw PreconditionError("blend_over_base: image dimensions differ");
        opacity = std::clamp(opacity, 0.0, 1.0);
        RgbaImage out {base.width, base.height, std::vector<std::uint8_t>(base.pixels.size())};
        for (std::size_t i = 0; i < base.pixels.size(); i += 4)
        {
            const double w = data.pixels[i + 3] / 255.0 * opacity;
            for (std::size_t c = 0; c < 4; ++c)
                out.pixels[i + c] = round_channel((1.0 - w) * base.pixels[i + c] + w * data.pixels[i + c]);
        }
        return out;
    }

    // ---- z-fold ------------------------------------------------------------------------------------------------------

    std::array<std::size_t, 2> default_fold(std::size_t nz) noexcept
    {
        auto tx = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(nz))));
        tx = std::max<std::size_t>(1, tx);
        while (tx * tx < nz)
            ++tx;
        return {tx, (nz + tx - 1) / tx};
    }

    DataTexture zfold_encode(const Volume3D& volume, std::size_t tiles_x, std::size_t tiles_y)
    {
        volume.check();
        if (tiles_x == 0 || tiles_y == 0 || tiles_x * tiles_y < volume.nz)
            throw PreconditionError(fmt::format("z-fold of {}x{} tiles cannot hold {} slices", tiles_x, tiles_y, volume.nz));
        const ZFoldLayout layout {tiles_x, tiles_y, volume.nx, volume.ny, volume.nz};

        float lo = std::numeric_limits<float>::infinity();
        float hi = -std::numeric_limits<float>::infinity();
        for (float v: volume.values)
            if (std::isfinite(v))
            {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        Normalization norm {0.0, 0.0, true};
        if (lo <= hi)
            norm = {lo, hi, lo == hi};
        const double range = norm.max - norm.min;

        std::vector<std::uint16_t> texels(layout.width() * layout.height(), 0);
        for (std::size_t z = 0; z < volume.nz; ++z)
            for (std::size_t y = 0; y < volume.ny; ++y)
            {
                const auto [u0, v] = layout.texel_of(0, y, z);
                std::uint16_t* row = texels.data() + v * layout.width() + u0;
                for (std::size_t x = 0; x < volume.nx; ++x)
                {
                    const double value = volume.at(x, y, z);
                    row[x] = (norm.degenerate || !std::isfinite(value)) ? 0 : quantize_u16((value - norm.min) / range);
                }
            }
        return {layout.width(), layout.height(), std::move(texels), norm, layout};
    }

    namespace
    {
        const ZFoldLayout& zfold_layout(const DataTexture& tex)
        {
            const auto* layout = std::get_if<ZFoldLayout>(&tex.layout);
            if (!layout || !std::holds_alternative<std::vector<std::uint16_t>>(tex.payload) || !tex.normalization)
                throw PreconditionError("texture is not a normalized u16 z-fold texture");
            return *layout;
        }
    } // namespace

    Volume3D zfold_decode(const DataTexture& tex)
    {
        const ZFoldLayout& layout = zfold_layout(tex);
        const auto& texels = std::get<std::vector<std::uint16_t>>(tex.payload);
        const Normalization& n = *tex.normalization;
        Volume3D vol(layout.nx, layout.ny, layout.nz);
        for (std::size_t z = 0; z < layout.nz; ++z)
            for (std::size_t y = 0; y < layout.ny; ++y)
                for (std::size_t x = 0; x < layout.nx; ++x)
                {
                    const auto [u, v] = layout.texel_of(x, y, z);
                    vol.at(x, y, z) = static_cast<float>(n.min + texels[v * tex.width + u] / 65535.0 * (n.max - n.min));
                }
        return vol;
    }

    double zfold_sample(const DataTexture& tex, double x, double y, double z, SamplerStats* stats)
    {
        const ZFoldLayout& layout = zfold_layout(tex);
        const auto& texels = std::get<std::vector<std::uint16_t>>(tex.payload);

        bool clamped = false;
        auto clamp_axis = [&clamped](double v, std::size_t n) {
            const double top = static_cast<double>(n - 1);
            if (std::isnan(v) || v < 0.0 || v > top)
            {
                clamped = true;
                return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, top);
            }
            return v;
        };
        x = clamp_axis(x, layout.nx);
        y = clamp_axis(y, layout.ny);
        z = clamp_axis(z, layout.nz);
        if (stats)
        {
            ++stats->samples;
            stats->clamped += clamped ? 1 : 0;
        }

        const auto x0 = static_cast<std::size_t>(std::floor(x));
        const auto y0 = static_cast<std::size_t>(std::floor(y));
        const auto z0 = static_cast<std::size_t>(std::floor(z));
        const std::size_t x1 = std::min(x0 + 1, layout.nx - 1);
        const std::size_t y1 = std::min(y0 + 1, layout.ny - 1);
        const std::size_t z1 = std::min(z0 + 1, layout.nz - 1);
        const double tx = x - static_cast<double>(x0);
        const double ty = y - static_cast<double>(y0);
        const double tz = z - static_cast<double>(z0);

        auto slice = [&](std::size_t zs) {
            auto texel = [&](std::size_t xs, std::size_t ys) {
                const auto [u, v] = layout.texel_of(xs, ys, zs);
                return static_cast<double>(texels[v * tex.width + u]);
            };
            const double bottom = texel(x0, y0) + (texel(x1, y0) - texel(x0, y0)) * tx;
            const double top = texel(x0, y1) + (texel(x1, y1) - texel(x0, y1)) * tx;
            return bottom + (top - bottom) * ty;
        };
        const double s0 = slice(z0);
        const double code = tz == 0.0 ? s0 : s0 + (slice(z1) - s0) * tz;
        const Normalization& n = *tex.normalization;
        return n.min + code / 65535.0 * (n.max - n.min);
    }

    double sample_trilinear(const Volume3D& volume, double x, double y, double z) noexcept
    {
        auto axis = [](double v, std::size_t n, std::size_t& i0, std::size_t& i1, double& t) {
            v = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, static_cast<double>(n - 1));
            i0 = static_cast<std::size_t>(std::floor(v));
            i1 = std::min(i0 + 1, n - 1);
            t = v - static_cast<double>(i0);
        };
        std::size_t x0, x1, y0, y1, z0, z1;
        double tx, ty, tz;
        axis(x, volume.nx, x0, x1, tx);
        axis(y, volume.ny, y0, y1, ty);
        axis(z, volume.nz, z0, z1, tz);
        auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
        auto plane = [&](std::size_t zs) {
            return lerp(lerp(volume.at(x0, y0, zs), volume.at(x1, y0, zs), tx),
                        lerp(volume.at(x0, y1, zs), volume.at(x1, y1, zs), tx), ty);
        };
        return lerp(plane(z0), plane(z1), tz);
    }

    // ---- 32-bit split ------------------------------------------------------------------------------------------------

    SplitF32 split_f32(float v) noexcept
    {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        return {static_cast<std::uint16_t>(bits >> 16), static_cast<std::uint16_t>(bits & 0xFFFFu)};
    }

    float merge_f32(std::uint16_t hi, std::uint16_t lo) noexcept
    {
        return std::bit_cast<float>((static_cast<std::uint32_t>(hi) << 16) | lo);
    }

    StreamlineTextures encode_streamlines_texture(std::span<const Streamline> lines)
    {
        if (lines.empty())
            throw PreconditionError("encode_streamlines_texture needs at least one line");
        StreamlineLayout layout;
        layout.line_count = lines.size();
        bool scalars = true;
        for (std::size_t i = 0; i < lines.size(); ++i)
        {
            const Streamline& s = lines[i];
            if (s.points.size() < 2)
                throw PreconditionError(fmt::format("streamline {} has {} point(s), at least 2 required", i, s.points.size()));
            if (!s.scalar.empty() && s.scalar.size() != s.points.size())
                throw PreconditionError(fmt::format("streamline {} has {} scalars for {} points", i, s.scalar.size(), s.points.size()));
            scalars = scalars && !s.scalar.empty();
            layout.counts.push_back(s.points.size());
            layout.max_points = std::max(layout.max_points, s.points.size());
        }

        const std::size_t texels = layout.max_points * layout.line_count;
        const SplitF32 pad = {static_cast<std::uint16_t>(padding_bits >> 16), static_cast<std::uint16_t>(padding_bits & 0xFFFFu)};
        auto blank = [&] {
            U16Pair p {std::vector<std::uint16_t>(texels, pad.hi), std::vector<std::uint16_t>(texels, pad.lo)};
            return DataTexture {layout.max_points, layout.line_count, std::move(p), std::nullopt, layout};
        };
        StreamlineTextures out {blank(), blank(), blank(), std::nullopt, layout};
        if (scalars)
            out.scalar = blank();

        auto put = [](DataTexture& tex, std::size_t index, float value) {
            auto& pair = std::get<U16Pair>(tex.payload);
            const SplitF32 s = split_f32(value);
            pair.hi[index] = s.hi;
            pair.lo[index] = s.lo;
        };
        for (std::size_t i = 0; i < lines.size(); ++i)
            for (std::size_t j = 0; j < lines[i].points.size(); ++j)
            {
                const std::size_t index = i * layout.max_points + j;
                const Vec3f p = lines[i].points[j];
                put(out.x, index, p.x);
                put(out.y, index, p.y);
                put(out.z, index, p.z);
                if (out.scalar)
                    put(*out.scalar, index, lines[i].scalar[j]);
            }
        return out;
    }

    std::vector<Streamline> decode_streamlines_texture(const StreamlineTextures& t)
    {
        const StreamlineLayout& layout = t.layout;
        if (layout.counts.size() != layout.line_count)
            throw PreconditionError("streamline layout counts do not match line count");
        const auto& px = std::get<U16Pair>(t.x.payload);
        const auto& py = std::get<U16Pair>(t.y.payload);
        const auto& pz = std::get<U16Pair>(t.z.payload);
        const U16Pair* ps = t.scalar ? &std::get<U16Pair>(t.scalar->payload) : nullptr;
        std::vector<Streamline> lines(layout.line_count);
        for (std::size_t i = 0; i < layout.line_count; ++i)
        {
            if (layout.counts[i] > layout.max_points)
                throw PreconditionError(fmt::format("streamline {} count {} exceeds row width {}", i, layout.counts[i], layout.max_points));
            Streamline& s = lines[i];
            s.points.reserve(layout.counts[i]);
            for (std::size_t j = 0; j < layout.counts[i]; ++j)
            {
                const std::size_t k = i * layout.max_points + j;
                s.points.push_back({merge_f32(px.hi[k], px.lo[k]), merge_f32(py.hi[k], py.lo[k]), merge_f32(pz.hi[k], pz.lo[k])});
                if (ps)
                    s.scalar.push_back(merge_f32(ps->hi[k], ps->lo[k]));
            }
        }
        return lines;
    }

    std::vector<std::uint8_t> encode_raw_u16(std::span<const std::uint16_t> plane)
    {
        std::vector<std::uint8_t> out(plane.size() * 2);
        for (std::size_t i = 0; i < plane.size(); ++i)
        {
            out[2 * i] = static_cast<std::uint8_t>(plane[i] & 0xFF);
            out[2 * i + 1] = static_cast<std::uint8_t>(plane[i] >> 8);
        }
        return out;
    }

    std::vector<std::uint16_t> decode_raw_u16(std::span<const std::uint8_t> bytes)
    {
        if (bytes.size() % 2 != 0)
            throw ParseError("raw u16 plane has an odd byte count", bytes.size());
        std::vector<std::uint16_t> out(bytes.size() / 2);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
        return out;
    }

    // ---- particles ---------------------------------------------------------------------------------------------------

    std::uint64_t CounterRng::bits(std::uint64_t counter) const noexcept
    {
        std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double CounterRng::uniform(std::uint64_t counter) const noexcept
    {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    std::vector<Particle> spawn_particles(const Volume3D& volume, std::size_t n, double threshold, std::uint64_t seed)
    {
        volume.check();
        const CounterRng rng(seed);
        const Vec3 extent {static_cast<double>(volume.nx) * volume.cell_size.x, static_cast<double>(volume.ny) * volume.cell_size.y,
                           static_cast<double>(volume.nz) * volume.cell_size.z};
        std::vector<Particle> out;
        for (std::size_t k = 0; k < n; ++k)
        {
            const Vec3 unit {rng.uniform(3 * k), rng.uniform(3 * k + 1), rng.uniform(3 * k + 2)};
            const Vec3 position {volume.origin.x + unit.x * extent.x, volume.origin.y + unit.y * extent.y,
                                 volume.origin.z + unit.z * extent.z};
            // Voxel centers sit at half-cell offsets from the origin.
            const double value = sample_trilinear(volume, unit.x * static_cast<double>(volume.nx) - 0.5,
                                                  unit.y * static_cast<double>(volume.ny) - 0.5,
                                                  unit.z * static_cast<double>(volume.nz) - 0.5);
            if (value >= threshold)
                out.push_back({position, value});
        }
        return out;
    }
} // namespace worldgen::datatex
