#include "worldgen/tiler.hpp"

#include "worldgen/error.hpp"
#include "worldgen/io.hpp"
#include "worldgen/png_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>

namespace worldgen::tiler
{
    using nlohmann::json;

    bool is_recommended_tile_size(std::size_t size) noexcept
    {
        return std::find(std::begin(recommended_tile_sizes), std::end(recommended_tile_sizes), size) !=
               std::end(recommended_tile_sizes);
    }

    std::string NamingScheme::name(std::size_t col, std::size_t row) const { return fmt::format("{}_x{}_y{}", basename, col, row); }

    namespace
    {
        std::optional<std::size_t> parse_index(std::string_view digits)
        {
            if (digits.empty() || (digits.size() > 1 && digits.front() == '0'))
                return std::nullopt;
            std::size_t v = 0;
            const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
            if (ec != std::errc() || ptr != digits.data() + digits.size())
                return std::nullopt;
            return v;
        }
    } // namespace

    std::optional<std::pair<std::size_t, std::size_t>> NamingScheme::parse(std::string_view name) const
    {
        const std::string prefix = basename + "_x";
        if (!name.starts_with(prefix))
            return std::nullopt;
        name.remove_prefix(prefix.size());
        // The basename may itself contain "_y", so split at the last occurrence.
        const std::size_t sep = name.rfind("_y");
        if (sep == std::string_view::npos)
            return std::nullopt;
        const auto col = parse_index(name.substr(0, sep));
        const auto row = parse_index(name.substr(sep + 2));
        if (!col || !row)
            return std::nullopt;
        return std::pair {*col, *row};
    }

    TileSet retile(const RasterGrid& grid, std::size_t tile_size, const NamingScheme& naming, PaddingMode padding)
    {
        grid.check();
        if (tile_size == 0)
            throw PreconditionError("tile size must be positive");

        TileSet set;
        set.tile_size = tile_size;
        set.naming = naming;
        set.valid_width = grid.width();
        set.valid_height = grid.height();
        set.source = grid.spec;
        set.nodata = grid.nodata;
        if (!is_recommended_tile_size(tile_size))
            set.warnings.push_back(
                fmt::format("tile size {} is not an engine-recommended landscape resolution", tile_size));

        const std::size_t w = grid.width();
        const std::size_t h = grid.height();
        const double sp = grid.spec.cell_spacing;
        const double extent = static_cast<double>(tile_size) * sp;
        for (std::size_t row = 0; row < set.tiles_y(); ++row)
            for (std::size_t col = 0; col < set.tiles_x(); ++col)
            {
                const double top = grid.spec.max_y() - static_cast<double>(row) * extent;
                GridSpec spec {grid.spec.origin_x + static_cast<double>(col) * extent, top - extent, sp, tile_size,
                               tile_size};
                RasterGrid tile(spec, 0.0, grid.nodata);
                for (std::size_t tr = 0; tr < tile_size; ++tr)
                {
                    const std::size_t north_row = row * tile_size + (tile_size - 1 - tr);
                    for (std::size_t tc = 0; tc < tile_size; ++tc)
                    {
                        const std::size_t src_col = col * tile_size + tc;
                        const bool inside = src_col < w && north_row < h;
                        if (!inside && padding == PaddingMode::zero)
                            continue;
                        const std::size_t c = std::min(src_col, w - 1);
                        const std::size_t n = std::min(north_row, h - 1);
                        tile.at(tc, tr) = grid.at(c, h - 1 - n);
                    }
                }
                set.tiles.emplace(TileIndex {col, row}, std::move(tile));
            }
        return set;
    }

    RasterGrid reassemble(const TileSet& set)
    {
        if (set.tile_size == 0 || set.valid_width == 0 || set.valid_height == 0)
            throw PreconditionError("reassemble: empty tile set");
        for (std::size_t row = 0; row < set.tiles_y(); ++row)
            for (std::size_t col = 0; col < set.tiles_x(); ++col)
            {
                const auto it = set.tiles.find({col, row});
                if (it == set.tiles.end())
                    throw Error(fmt::format("tile set '{}' is missing tile ({}, {}) of its {}x{} rectangle",
                                            set.naming.basename, col, row, set.tiles_x(), set.tiles_y()));
                if (it->second.width() != set.tile_size || it->second.height() != set.tile_size)
                    throw Error(fmt::format("tile ({}, {}) is {}x{}, expected {}x{}", col, row, it->second.width(),
                                            it->second.height(), set.tile_size, set.tile_size));
            }
        if (set.tiles.size() != set.tiles_x() * set.tiles_y())
            throw Error(fmt::format("tile set '{}' has tiles outside its {}x{} rectangle", set.naming.basename,
                                    set.tiles_x(), set.tiles_y()));

        GridSpec spec = set.source;
        spec.width = set.valid_width;
        spec.height = set.valid_height;
        RasterGrid out(spec, 0.0, set.nodata);
        const std::size_t s = set.tile_size;
        for (std::size_t r = 0; r < spec.height; ++r)
        {
            const std::size_t north_row = spec.height - 1 - r;
            for (std::size_t c = 0; c < spec.width; ++c)
            {
                const RasterGrid& tile = set.tiles.at({c / s, north_row / s});
                out.at(c, r) = tile.at(c % s, s - 1 - north_row % s);
            }
        }
        return out;
    }

    std::uint16_t quantize(double value, const QuantSpec& q, bool& clamped) noexcept
    {
        double scaled = 0.0;
        double top = 255.0;
        if (const auto* h = std::get_if<Height16>(&q))
        {
            top = 65535.0;
            const double range = h->z_max - h->z_min;
            scaled = range > 0.0 ? (value - h->z_min) / range * top : 0.0;
        }
        else
            scaled = value * top;
        clamped = false;
        if (std::isnan(scaled))
        {
            clamped = true;
            return 0;
        }
        const double rounded = std::nearbyint(scaled);
        if (rounded < 0.0)
        {
            clamped = true;
            return 0;
        }
        if (rounded > top)
        {
            clamped = true;
            return static_cast<std::uint16_t>(top);
        }
        return static_cast<std::uint16_t>(rounded);
    }

    double dequantize(std::uint16_t code, const QuantSpec& q) noexcept
    {
        if (const auto* h = std::get_if<Height16>(&q))
            return h->z_min + static_cast<double>(code) / 65535.0 * (h->z_max - h->z_min);
        return static_cast<double>(code) / 255.0;
    }

    double quantization_step(const QuantSpec& q) noexcept
    {
        if (const auto* h = std::get_if<Height16>(&q))
            return (h->z_max - h->z_min) / 65535.0;
        return 1.0 / 255.0;
    }

    double TileSetRecord::scale_z() const noexcept
    {
        if (const auto* h = std::get_if<Height16>(&quantization))
            return (h->z_max - h->z_min) * 100.0 / 512.0;
        return 0.0;
    }

    json to_json(const TileSetRecord& r)
    {
        json quant;
        if (const auto* h = std::get_if<Height16>(&r.quantization))
            quant = {{"kind", "height16"}, {"z_min", h->z_min}, {"z_max", h->z_max}, {"step", quantization_step(r.quantization)}};
        else
            quant = {{"kind", "mask8"}, {"min", 0.0}, {"max", 1.0}, {"step", quantization_step(r.quantization)}};

        json tiles = json::array();
        for (const TileFile& f: r.files)
            tiles.push_back({{"path", f.path}, {"col", f.col}, {"row", f.row}, {"clamped", f.clamped}, {"nodata", f.nodata}});

        json scale = {{"x", r.scale_xy()}, {"y", r.scale_xy()}};
        if (std::holds_alternative<Height16>(r.quantization))
            scale["z"] = r.scale_z();

        return {
            {"basename", r.basename},
            {"naming_pattern", "{basename}_x{col}_y{row}"},
            {"row_zero", "north"},
            {"bit_depth", r.bit_depth()},
            {"quantization", quant},
            {"tile_size", r.tile_size},
            {"tiles_x", r.tiles_x},
            {"tiles_y", r.tiles_y},
            {"valid_region", {r.valid_width, r.valid_height}},
            {"cell_spacing", r.source.cell_spacing},
            {"origin", {r.source.origin_x, r.source.origin_y}},
            {"nodata", r.nodata},
            {"engine_scale_cm", scale},
            {"tiles", tiles},
        };
    }

    TileSetRecord tile_set_record_from_json(const json& j)
    {
        TileSetRecord r;
        r.basename = j.at("basename").get<std::string>();
        const json& q = j.at("quantization");
        if (q.at("kind") == "height16")
            r.quantization = Height16 {q.at("z_min").get<double>(), q.at("z_max").get<double>()};
        else if (q.at("kind") == "mask8")
            r.quantization = Mask8 {};
        else
            throw ParseError(fmt::format("unknown quantization kind {}", q.at("kind").dump()));
        r.tile_size = j.at("tile_size").get<std::size_t>();
        r.tiles_x = j.at("tiles_x").get<std::size_t>();
        r.tiles_y = j.at("tiles_y").get<std::size_t>();
        r.valid_width = j.at("valid_region").at(0).get<std::size_t>();
        r.valid_height = j.at("valid_region").at(1).get<std::size_t>();
        r.source.cell_spacing = j.at("cell_spacing").get<double>();
        r.source.origin_x = j.at("origin").at(0).get<double>();
        r.source.origin_y = j.at("origin").at(1).get<double>();
        r.source.width = r.valid_width;
        r.source.height = r.valid_height;
        r.nodata = j.value("nodata", default_nodata);
        for (const json& t: j.at("tiles"))
            r.files.push_back({t.at("path").get<std::string>(), t.at("col").get<std::size_t>(), t.at("row").get<std::size_t>(),
                               t.value("clamped", std::size_t {0}), t.value("nodata", std::size_t {0})});
        return r;
    }

    TileSetRecord write_tiles(const TileSet& set, const QuantSpec& quantization, const std::filesystem::path& out_dir)
    {
        TileSetRecord record;
        record.basename = set.naming.basename;
        record.quantization = quantization;
        record.tile_size = set.tile_size;
        record.tiles_x = set.tiles_x();
        record.tiles_y = set.tiles_y();
        record.valid_width = set.valid_width;
        record.valid_height = set.valid_height;
        record.source = set.source;
        record.nodata = set.nodata;

        const int depth = std::holds_alternative<Height16>(quantization) ? 16 : 8;
        const std::size_t s = set.tile_size;
        for (const auto& [index, tile]: set.tiles)
        {
            png::GrayImage image {s, s, depth, std::vector<std::uint16_t>(s * s)};
            TileFile file;
            file.col = index.col;
            file.row = index.row;
            for (std::size_t k = 0; k < s; ++k)
                for (std::size_t c = 0; c < s; ++c)
                {
                    const double v = tile.at(c, s - 1 - k);
                    if (tile.is_nodata(v))
                    {
                        ++file.nodata;
                        continue;
                    }
                    bool clamped = false;
                    image.pixels[k * s + c] = quantize(v, quantization, clamped);
                    file.clamped += clamped ? 1 : 0;
                }
            file.path = (std::filesystem::path(set.naming.basename) / (set.naming.name(index.col, index.row) + ".png"))
                            .generic_string();
            io::write_bytes(out_dir / file.path, png::encode_gray(image));
            record.files.push_back(std::move(file));
        }
        return record;
    }

    TileSet read_tiles(const TileSetRecord& record, const std::filesystem::path& out_dir)
    {
        TileSet set;
        set.tile_size = record.tile_size;
        set.naming = {record.basename};
        set.valid_width = record.valid_width;
        set.valid_height = record.valid_height;
        set.source = record.source;
        set.nodata = record.nodata;
        const std::size_t s = record.tile_size;
        const double extent = static_cast<double>(s) * record.source.cell_spacing;
        for (const TileFile& f: record.files)
        {
            const png::GrayImage image = png::decode_gray(io::read_bytes(out_dir / f.path));
            if (image.width != s || image.height != s)
                throw Error(fmt::format("tile '{}' is {}x{}, expected {}x{}", f.path, image.width, image.height, s, s));
            if (image.bit_depth != record.bit_depth())
                throw Error(fmt::format("tile '{}' has bit depth {}, expected {}", f.path, image.bit_depth, record.bit_depth()));
            const double top = record.source.max_y() - static_cast<double>(f.row) * extent;
            GridSpec spec {record.source.origin_x + static_cast<double>(f.col) * extent, top - extent,
                           record.source.cell_spacing, s, s};
            RasterGrid tile(spec, 0.0, record.nodata);
            for (std::size_t k = 0; k < s; ++k)
                for (std::size_t c = 0; c < s; ++c)
                    tile.at(c, s - 1 - k) = dequantize(image.pixels[k * s + c], record.quantization);
            set.tiles.emplace(TileIndex {f.col, f.row}, std::move(tile));
        }
        return set;
    }
} // namespace worldgen::tiler
