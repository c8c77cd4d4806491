#include "worldgen/ingest.hpp"

#include "worldgen/error.hpp"
#include "worldgen/io.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <optional>

namespace worldgen::ingest
{
    using nlohmann::json;

    namespace
    {
        std::optional<double> to_number(std::string_view token)
        {
            double v = 0.0;
            if (!token.empty() && token.front() == '+')
                token.remove_prefix(1);
            const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (ec != std::errc() || ptr != token.data() + token.size())
                return std::nullopt;
            return v;
        }

        std::vector<std::string_view> split_ws(std::string_view line)
        {
            std::vector<std::string_view> tokens;
            std::size_t i = 0;
            while (i < line.size())
            {
                while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
                    ++i;
                const std::size_t start = i;
                while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
                    ++i;
                if (i > start)
                    tokens.push_back(line.substr(start, i - start));
            }
            return tokens;
        }

        /// Splits on '\n', tolerating "\r\n".
        std::vector<std::string_view> split_lines(std::string_view text)
        {
            std::vector<std::string_view> lines;
            std::size_t start = 0;
            while (start <= text.size())
            {
                std::size_t end = text.find('\n', start);
                if (end == std::string_view::npos)
                    end = text.size();
                std::string_view line = text.substr(start, end - start);
                if (!line.empty() && line.back() == '\r')
                    line.remove_suffix(1);
                lines.push_back(line);
                start = end + 1;
            }
            return lines;
        }

        // ---- GeoJSON ----------------------------------------------------------------------------------------

        std::string json_scalar_text(const json& v)
        {
            if (v.is_string())
                return v.get<std::string>();
            if (v.is_number_integer())
                return std::to_string(v.get<long long>());
            if (v.is_number())
                return io::format_double(v.get<double>());
            return v.dump();
        }

        Vec2 read_position(const json& pos, const std::string& id)
        {
            if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
                throw GeometryError(fmt::format("feature '{}': position must be an array of at least two numbers", id));
            const Vec2 p {pos[0].get<double>(), pos[1].get<double>()};
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw GeometryError(fmt::format("feature '{}': non-finite coordinate", id));
            return p;
        }

        std::vector<Vec2> read_positions(const json& arr, const std::string& id)
        {
            if (!arr.is_array())
                throw GeometryError(fmt::format("feature '{}': coordinates must be an array", id));
            std::vector<Vec2> out;
            out.reserve(arr.size());
            for (const json& p: arr)
                out.push_back(read_position(p, id));
            return out;
        }

        std::vector<Ring> read_polygon(const json& coords, const std::string& id)
        {
            if (!coords.is_array() || coords.empty())
                throw GeometryError(fmt::format("feature '{}': polygon has no rings", id));
            std::vector<Ring> rings;
            for (const json& ring_json: coords)
            {
                std::vector<Vec2> ring = read_positions(ring_json, id);
                if (ring.size() < 4)
                    throw GeometryError(
                        fmt::format("feature '{}': ring has {} vertices, at least 4 required", id, ring.size()));
                if (ring.front() != ring.back())
                    throw GeometryError(fmt::format("feature '{}': unclosed ring", id));
                ring.pop_back();
                rings.push_back(std::move(ring));
            }
            return rings;
        }

        std::vector<Vec2> read_linestring(const json& coords, const std::string& id)
        {
            std::vector<Vec2> line = read_positions(coords, id);
            if (line.size() < 2)
                throw GeometryError(
                    fmt::format("feature '{}': line string has {} vertices, at least 2 required", id, line.size()));
            return line;
        }
    } // namespace

    VectorLayer parse_geojson_layer(std::string_view text, LayerKind expected_kind, const GeoJsonOptions& options)
    {
        json doc;
        try
        {
            doc = json::parse(text);
        }
        catch (const json::parse_error& e)
        {
            throw ParseError(fmt::format("malformed JSON at byte {}: {}", e.byte, e.what()), e.byte);
        }
        if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
            !doc["features"].is_array())
            throw ParseError("GeoJSON root must be a FeatureCollection with a features array");

        VectorLayer layer;
        layer.kind = expected_kind;
        layer.crs_id = options.default_crs;
        if (doc.contains("crs") && doc["crs"].is_object())
        {
            const json& crs = doc["crs"];
            if (crs.contains("properties") && crs["properties"].contains("name") && crs["properties"]["name"].is_string())
                layer.crs_id = crs["properties"]["name"].get<std::string>();
        }

        std::size_t index = 0;
        for (const json& f: doc["features"])
        {
            const std::size_t feature_index = index++;
            if (!f.is_object())
                throw ParseError(fmt::format("feature {} is not an object", feature_index));
            const json properties = f.contains("properties") && f["properties"].is_object() ? f["properties"] : json::object();

            std::string id;
            if (f.contains("id") && !f["id"].is_null())
                id = json_scalar_text(f["id"]);
            else if (properties.contains(options.id_key) && !properties[options.id_key].is_null())
                id = json_scalar_text(properties[options.id_key]);
            else
                id = fmt::format("feature-{}", feature_index);

            std::string label = options.default_class;
            if (properties.contains(options.class_key) && !properties[options.class_key].is_null())
                label = json_scalar_text(properties[options.class_key]);
            if (label.empty())
                throw ParseError(fmt::format("feature '{}' has no '{}' property", id, options.class_key));

            std::optional<double> value;
            if (properties.contains(options.value_key) && !properties[options.value_key].is_null())
            {
                const json& v = properties[options.value_key];
                if (!v.is_number())
                    throw ParseError(fmt::format("feature '{}': property '{}' is not a number", id, options.value_key));
                value = v.get<double>();
            }

            if (!f.contains("geometry") || f["geometry"].is_null())
            {
                layer.warnings.push_back(fmt::format("feature '{}' has no geometry; skipped", id));
                continue;
            }
            const json& geom = f["geometry"];
            const std::string type = geom.value("type", "");
            const json coords = geom.contains("coordinates") ? geom["coordinates"] : json();

            const bool polygon_type = type == "Polygon" || type == "MultiPolygon";
            const bool line_type = type == "LineString" || type == "MultiLineString";
            if ((expected_kind == LayerKind::polygon && !polygon_type) ||
                (expected_kind == LayerKind::polyline && !line_type))
                throw KindError(fmt::format("feature '{}' has geometry type '{}', expected {}", id, type,
                                            expected_kind == LayerKind::polygon ? "Polygon/MultiPolygon"
                                                                                : "LineString/MultiLineString"));

            const bool multi = type.starts_with("Multi");
            std::vector<json> parts;
            if (multi)
            {
                if (!coords.is_array())
                    throw GeometryError(fmt::format("feature '{}': coordinates must be an array", id));
                parts.assign(coords.begin(), coords.end());
            }
            else
                parts.push_back(coords);

            for (std::size_t k = 0; k < parts.size(); ++k)
            {
                Feature feature;
                feature.class_label = label;
                feature.value = value;
                feature.feature_id = multi ? fmt::format("{}#{}", id, k) : id;
                if (expected_kind == LayerKind::polygon)
                {
                    feature.rings = read_polygon(parts[k], feature.feature_id);
                    const bool simple = std::all_of(feature.rings.begin(), feature.rings.end(),
                                                    [](const Ring& r) { return ring_is_simple(r); });
                    if (!simple)
                    {
                        layer.warnings.push_back(
                            fmt::format("feature '{}': self-intersecting ring; skipped", feature.feature_id));
                        continue;
                    }
                }
                else
                    feature.vertices = read_linestring(parts[k], feature.feature_id);
                layer.features.push_back(std::move(feature));
            }
        }
        return layer;
    }

    // ---- ESRI ASCII grid ----------------------------------------------------------------------------------------

    RasterGrid parse_esri_ascii_grid(std::string_view text)
    {
        const std::vector<std::string_view> lines = split_lines(text);
        std::map<std::string, double> header;
        std::size_t line_no = 0;
        for (; line_no < lines.size(); ++line_no)
        {
            const auto tokens = split_ws(lines[line_no]);
            if (tokens.empty())
                continue;
            if (to_number(tokens[0]))
                break;
            std::string key(tokens[0]);
            std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
            if (tokens.size() != 2)
                throw ParseError(fmt::format("line {}: header '{}' needs exactly one value", line_no + 1, key), line_no + 1);
            const auto v = to_number(tokens[1]);
            if (!v)
                throw ParseError(fmt::format("line {}: header '{}' value is not numeric", line_no + 1, key), line_no + 1);
            header[key] = *v;
        }

        auto require = [&](const char* key) {
            const auto it = header.find(key);
            if (it == header.end())
                throw ParseError(fmt::format("missing header key '{}'", key));
            return it->second;
        };

        const double ncols = require("ncols");
        const double nrows = require("nrows");
        const double cellsize = require("cellsize");
        if (ncols < 1 || nrows < 1 || ncols != std::floor(ncols) || nrows != std::floor(nrows))
            throw ParseError("ncols and nrows must be positive integers");
        if (!(cellsize > 0.0))
            throw ParseError("cellsize must be positive");

        double x0 = 0.0;
        double y0 = 0.0;
        if (header.contains("xllcorner"))
            x0 = header["xllcorner"];
        else if (header.contains("xllcenter"))
            x0 = header["xllcenter"] - 0.5 * cellsize;
        else
            throw ParseError("missing header key 'xllcorner'");
        if (header.contains("yllcorner"))
            y0 = header["yllcorner"];
        else if (header.contains("yllcenter"))
            y0 = header["yllcenter"] - 0.5 * cellsize;
        else
            throw ParseError("missing header key 'yllcorner'");

        GridSpec spec {x0, y0, cellsize, static_cast<std::size_t>(ncols), static_cast<std::size_t>(nrows)};
        RasterGrid grid(spec, 0.0, header.contains("nodata_value") ? header["nodata_value"] : default_nodata);

        std::size_t row = 0;
        for (; line_no < lines.size(); ++line_no)
        {
            const auto tokens = split_ws(lines[line_no]);
            if (tokens.empty())
                continue;
            if (row >= spec.height)
                throw ParseError(fmt::format("row {}: more than nrows={} data rows", row, spec.height), row);
            if (tokens.size() != spec.width)
                throw ParseError(fmt::format("row {}: {} values, expected ncols={}", row, tokens.size(), spec.width), row);
            const std::size_t target_row = spec.height - 1 - row;
            for (std::size_t c = 0; c < spec.width; ++c)
            {
                const auto v = to_number(tokens[c]);
                if (!v)
                    throw ParseError(fmt::format("row {}: value '{}' is not numeric", row, tokens[c]), row);
                grid.at(c, target_row) = *v;
            }
            ++row;
        }
        if (row != spec.height)
            throw ParseError(fmt::format("row {}: expected nrows={} data rows, found {}", row, spec.height, row), row);
        return grid;
    }

    std::string write_esri_ascii_grid(const RasterGrid& grid)
    {
        grid.check();
        std::string out = fmt::format("ncols {}\nnrows {}\nxllcorner {}\nyllcorner {}\ncellsize {}\nNODATA_value {}\n",
                                      grid.width(), grid.height(), io::format_double(grid.spec.origin_x),
                                      io::format_double(grid.spec.origin_y), io::format_double(grid.spec.cell_spacing),
                                      io::format_double(grid.nodata));
        for (std::size_t r = grid.height(); r-- > 0;)
        {
            for (std::size_t c = 0; c < grid.width(); ++c)
            {
                if (c != 0)
                    out += ' ';
                out += io::format_double(grid.at(c, r));
            }
            out += '\n';
        }
        return out;
    }

    // ---- point clouds -------------------------------------------------------------------------------------------

    namespace
    {
        constexpr std::size_t las_header_size = 227;
        constexpr std::size_t las_format0_record = 20;

        template <typename T>
        T read_le(std::span<const std::uint8_t> bytes, std::size_t offset)
        {
            if (offset + sizeof(T) > bytes.size())
                throw ParseError(fmt::format("LAS data truncated at byte {}", offset), offset);
            T v;
            std::memcpy(&v, bytes.data() + offset, sizeof(T));
            static_assert(std::endian::native == std::endian::little, "LAS reader assumes a little-endian host");
            return v;
        }

        template <typename T>
        void write_le(std::vector<std::uint8_t>& out, std::size_t offset, T v)
        {
            std::memcpy(out.data() + offset, &v, sizeof(T));
        }

        PointCloud parse_las(std::span<const std::uint8_t> bytes)
        {
            if (bytes.size() < 4 || std::memcmp(bytes.data(), "LASF", 4) != 0)
                throw FormatError("not a LAS file: magic bytes are not 'LASF'");
            if (bytes.size() < las_header_size)
                throw ParseError("LAS header truncated", bytes.size());

            const auto version_major = read_le<std::uint8_t>(bytes, 24);
            const auto version_minor = read_le<std::uint8_t>(bytes, 25);
            const auto offset_to_points = read_le<std::uint32_t>(bytes, 96);
            const auto point_format = read_le<std::uint8_t>(bytes, 104);
            const auto record_length = read_le<std::uint16_t>(bytes, 105);
            const auto point_count = read_le<std::uint32_t>(bytes, 107);

            // LAZ keeps the LASF signature and flags compression in the top bits of the format id.
            if ((point_format & 0xC0u) != 0)
                throw UnsupportedFormatError("compressed LAZ point data is not supported");
            if (version_major != 1)
                throw UnsupportedFormatError(fmt::format("LAS version {}.{} is not supported", version_major, version_minor));
            if (point_format != 0)
                throw UnsupportedFormatError(fmt::format("LAS point data format {} is not supported (only 0)", point_format));
            if (record_length < las_format0_record)
                throw ParseError(fmt::format("LAS record length {} too short for format 0", record_length), 105);

            const Vec3 scale {read_le<double>(bytes, 131), read_le<double>(bytes, 139), read_le<double>(bytes, 147)};
            const Vec3 offset {read_le<double>(bytes, 155), read_le<double>(bytes, 163), read_le<double>(bytes, 171)};

            const std::size_t end = static_cast<std::size_t>(offset_to_points) +
                                    static_cast<std::size_t>(point_count) * record_length;
            if (end > bytes.size())
                throw ParseError(fmt::format("LAS point data truncated: need {} bytes, have {}", end, bytes.size()),
                                 bytes.size());

            PointCloud cloud;
            cloud.points.reserve(point_count);
            cloud.classification.reserve(point_count);
            for (std::size_t i = 0; i < point_count; ++i)
            {
                const std::size_t base = offset_to_points + i * record_length;
                const auto x = read_le<std::int32_t>(bytes, base);
                const auto y = read_le<std::int32_t>(bytes, base + 4);
                const auto z = read_le<std::int32_t>(bytes, base + 8);
                cloud.points.push_back({x * scale.x + offset.x, y * scale.y + offset.y, z * scale.z + offset.z});
                cloud.classification.push_back(read_le<std::uint8_t>(bytes, base + 15));
            }
            return cloud;
        }

        PointCloud parse_xyz(std::string_view text)
        {
            PointCloud cloud;
            const auto lines = split_lines(text);
            for (std::size_t i = 0; i < lines.size(); ++i)
            {
                const auto tokens = split_ws(lines[i]);
                if (tokens.empty() || tokens[0].starts_with('#'))
                    continue;
                if (tokens.size() < 3)
                    throw ParseError(fmt::format("line {}: expected 'x y z'", i + 1), i + 1);
                Vec3 p;
                double* dst[3] = {&p.x, &p.y, &p.z};
                for (int k = 0; k < 3; ++k)
                {
                    const auto v = to_number(tokens[k]);
                    if (!v || !std::isfinite(*v))
                        throw ParseError(fmt::format("line {}: '{}' is not a finite number", i + 1, tokens[k]), i + 1);
                    *dst[k] = *v;
                }
                cloud.points.push_back(p);
            }
            return cloud;
        }
    } // namespace

    PointCloud parse_point_cloud(std::span<const std::uint8_t> bytes, PointFormat format)
    {
        if (format == PointFormat::las)
            return parse_las(bytes);
        return parse_xyz({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
    }

    PointCloud parse_point_cloud(std::string_view bytes, PointFormat format)
    {
        return parse_point_cloud(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()),
                                 format);
    }

    std::vector<std::uint8_t> encode_las(const PointCloud& cloud, const LasEncoding& encoding)
    {
        const std::size_t n = cloud.points.size();
        std::vector<std::uint8_t> out(las_header_size + n * las_format0_record, 0);
        std::memcpy(out.data(), "LASF", 4);
        out[24] = 1;
        out[25] = 2;
        const char software[] = "worldgen";
        std::memcpy(out.data() + 58, software, sizeof(software) - 1);
        write_le<std::uint16_t>(out, 94, las_header_size);
        write_le<std::uint32_t>(out, 96, las_header_size);
        write_le<std::uint32_t>(out, 100, 0);
        write_le<std::uint8_t>(out, 104, 0);
        write_le<std::uint16_t>(out, 105, las_format0_record);
        write_le<std::uint32_t>(out, 107, static_cast<std::uint32_t>(n));
        write_le<std::uint32_t>(out, 111, static_cast<std::uint32_t>(n));
        write_le<double>(out, 131, encoding.scale.x);
        write_le<double>(out, 139, encoding.scale.y);
        write_le<double>(out, 147, encoding.scale.z);
        write_le<double>(out, 155, encoding.offset.x);
        write_le<double>(out, 163, encoding.offset.y);
        write_le<double>(out, 171, encoding.offset.z);

        Vec3 lo {0, 0, 0};
        Vec3 hi {0, 0, 0};
        for (std::size_t i = 0; i < n; ++i)
        {
            const Vec3 p = cloud.points[i];
            const auto x = static_cast<std::int32_t>(std::llround((p.x - encoding.offset.x) / encoding.scale.x));
            const auto y = static_cast<std::int32_t>(std::llround((p.y - encoding.offset.y) / encoding.scale.y));
            const auto z = static_cast<std::int32_t>(std::llround((p.z - encoding.offset.z) / encoding.scale.z));
            const std::size_t base = las_header_size + i * las_format0_record;
            write_le<std::int32_t>(out, base, x);
            write_le<std::int32_t>(out, base + 4, y);
            write_le<std::int32_t>(out, base + 8, z);
            out[base + 14] = 0x09; // return 1 of 1
            out[base + 15] = i < cloud.classification.size() ? cloud.classification[i] : 1;
            if (i == 0)
                lo = hi = p;
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
        write_le<double>(out, 179, hi.x);
        write_le<double>(out, 187, lo.x);
        write_le<double>(out, 195, hi.y);
        write_le<double>(out, 203, lo.y);
        write_le<double>(out, 211, hi.z);
        write_le<double>(out, 219, lo.z);
        return out;
    }

    // ---- streamlines & volumes -----------------------------------------------------------------------------------

    std::vector<Streamline> parse_streamlines_text(std::string_view text)
    {
        std::vector<Streamline> lines;
        Streamline current;
        bool with_scalar = false;
        auto flush = [&] {
            if (!current.points.empty())
                lines.push_back(std::move(current));
            current = {};
        };
        const auto rows = split_lines(text);
        for (std::size_t i = 0; i < rows.size(); ++i)
        {
            const auto tokens = split_ws(rows[i]);
            if (!tokens.empty() && tokens[0].starts_with('#'))
                continue;
            if (tokens.empty())
            {
                flush();
                continue;
            }
            if (tokens.size() != 3 && tokens.size() != 4)
                throw ParseError(fmt::format("line {}: expected 'x y z [scalar]'", i + 1), i + 1);
            if (current.points.empty())
                with_scalar = tokens.size() == 4;
            else if (with_scalar != (tokens.size() == 4))
                throw ParseError(fmt::format("line {}: scalar column present on some points only", i + 1), i + 1);
            float v[4] {};
            for (std::size_t k = 0; k < tokens.size(); ++k)
            {
                float f = 0.0f;
                std::string_view t = tokens[k];
                const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), f);
                if (ec != std::errc() || ptr != t.data() + t.size())
                    throw ParseError(fmt::format("line {}: '{}' is not a number", i + 1, t), i + 1);
                v[k] = f;
            }
            current.points.push_back({v[0], v[1], v[2]});
            if (with_scalar)
                current.scalar.push_back(v[3]);
        }
        flush();
        return lines;
    }

    std::string write_streamlines_text(std::span<const Streamline> lines)
    {
        auto f = [](float v) {
            char buf[32];
            const auto r = std::to_chars(buf, buf + sizeof(buf), v);
            return std::string(buf, r.ptr);
        };
        std::string out;
        for (std::size_t i = 0; i < lines.size(); ++i)
        {
            if (i != 0)
                out += '\n';
            const Streamline& s = lines[i];
            for (std::size_t k = 0; k < s.points.size(); ++k)
            {
                out += f(s.points[k].x) + ' ' + f(s.points[k].y) + ' ' + f(s.points[k].z);
                if (!s.scalar.empty())
                    out += ' ' + f(s.scalar[k]);
                out += '\n';
            }
        }
        return out;
    }

    Volume3D read_volume(const std::filesystem::path& descriptor)
    {
        json doc;
        try
        {
            doc = json::parse(io::read_text(descriptor));
        }
        catch (const json::parse_error& e)
        {
            throw ParseError(fmt::format("volume descriptor: malformed JSON at byte {}", e.byte), e.byte);
        }
        try
        {
            const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
            if (dims.size() != 3)
                throw ParseError("volume descriptor: dims must have 3 entries");
            Volume3D vol(dims[0], dims[1], dims[2]);
            const auto origin = doc.value("origin", std::vector<double> {0, 0, 0});
            const auto cell = doc.value("cell_size", std::vector<double> {1, 1, 1});
            if (origin.size() != 3 || cell.size() != 3)
                throw ParseError("volume descriptor: origin and cell_size must have 3 entries");
            vol.origin = {origin[0], origin[1], origin[2]};
            vol.cell_size = {cell[0], cell[1], cell[2]};
            const auto raw = io::read_bytes(descriptor.parent_path() / doc.at("data").get<std::string>());
            if (raw.size() != vol.values.size() * sizeof(float))
                throw ParseError(fmt::format("volume data has {} bytes, expected {}", raw.size(), vol.values.size() * sizeof(float)));
            std::memcpy(vol.values.data(), raw.data(), raw.size());
            vol.check();
            return vol;
        }
        catch (const json::exception& e)
        {
            throw ParseError(fmt::format("volume descriptor: {}", e.what()));
        }
    }

    void write_volume(const std::filesystem::path& descriptor, const Volume3D& volume)
    {
        volume.check();
        const std::string data_name = descriptor.stem().string() + ".f32";
        const json doc = {
            {"dims", {volume.nx, volume.ny, volume.nz}},
            {"origin", {volume.origin.x, volume.origin.y, volume.origin.z}},
            {"cell_size", {volume.cell_size.x, volume.cell_size.y, volume.cell_size.z}},
            {"data", data_name},
        };
        io::write_text(descriptor, doc.dump(2) + "\n");
        io::write_bytes(descriptor.parent_path() / data_name,
                        {reinterpret_cast<const std::uint8_t*>(volume.values.data()), volume.values.size() * sizeof(float)});
    }
} // namespace worldgen::ingest
