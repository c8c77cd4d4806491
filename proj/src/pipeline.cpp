#include "worldgen/pipeline.hpp"

#include "worldgen/error.hpp"
#include "worldgen/ingest.hpp"
#include "worldgen/io.hpp"
#include "worldgen/mesh.hpp"
#include "worldgen/parallel.hpp"
#include "worldgen/png_io.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <set>

namespace worldgen::pipeline
{
    using nlohmann::json;
    namespace fs = std::filesystem;

    bool InputPaths::any() const noexcept
    {
        return !elevation.empty() || buildings || roads || landuse || pointcloud || isolines || volume || streamlines;
    }

    // ---- config ------------------------------------------------------------------------------------------------------

    namespace
    {
        void reject_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed)
        {
            if (!obj.is_object())
                throw ConfigError(fmt::format("{}: expected an object", where));
            for (const auto& [key, value]: obj.items())
                if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                    throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
        }

        template <typename T>
        T get(const json& obj, const std::string& key, const std::string& where)
        {
            try
            {
                return obj.at(key).get<T>();
            }
            catch (const json::exception&)
            {
                throw ConfigError(fmt::format("{}.{}: missing or of the wrong type", where, key));
            }
        }

        template <typename T>
        T get_or(const json& obj, const std::string& key, const std::string& where, T fallback)
        {
            return obj.contains(key) ? get<T>(obj, key, where) : fallback;
        }

        std::optional<fs::path> optional_path(const json& obj, const std::string& key, const fs::path& base)
        {
            if (!obj.contains(key))
                return std::nullopt;
            return base / get<std::string>(obj, key, "inputs");
        }

        std::vector<datatex::ColorStop> parse_colormap(const json& j)
        {
            std::vector<datatex::ColorStop> stops;
            if (!j.is_array())
                throw ConfigError("isolines.colormap: expected an array of [position, r, g, b, a]");
            for (const json& s: j)
            {
                if (!s.is_array() || s.size() != 5)
                    throw ConfigError("isolines.colormap: every stop is [position, r, g, b, a]");
                datatex::ColorStop stop;
                stop.position = s[0].get<double>();
                for (std::size_t c = 0; c < 4; ++c)
                {
                    const int v = s[c + 1].get<int>();
                    if (v < 0 || v > 255)
                        throw ConfigError("isolines.colormap: channels must lie in 0..255");
                    stop.rgba[c] = static_cast<std::uint8_t>(v);
                }
                stops.push_back(stop);
            }
            try
            {
                datatex::Colormap check(stops);
            }
            catch (const PreconditionError& e)
            {
                throw ConfigError(fmt::format("isolines.colormap: {}", e.what()));
            }
            return stops;
        }
    } // namespace

    std::vector<datatex::ColorStop> default_colormap()
    {
        return {{0.0, {49, 54, 149, 255}},
                {0.25, {69, 117, 180, 255}},
                {0.5, {171, 217, 233, 255}},
                {0.75, {253, 174, 97, 255}},
                {1.0, {215, 48, 39, 255}}};
    }

    PipelineConfig parse_config(const json& j, const fs::path& base_dir)
    {
        reject_unknown(j, "config",
                       {"version", "inputs", "grid", "tile_size", "properties", "roads", "landuse", "buildings", "isolines",
                        "volume", "streamlines", "output_dir", "seed"});
        const int version = get<int>(j, "version", "config");
        if (version != config_version)
            throw ConfigError(fmt::format("config.version: unsupported version {}, expected {}", version, config_version));

        PipelineConfig c;
        const json& in = j.contains("inputs") ? j.at("inputs") : json::object();
        reject_unknown(in, "inputs",
                       {"elevation", "buildings", "roads", "landuse", "pointcloud", "isolines", "volume", "streamlines"});
        if (in.contains("elevation"))
        {
            const json& e = in.at("elevation");
            if (e.is_string())
                c.inputs.elevation.push_back(base_dir / e.get<std::string>());
            else
                for (const auto& p: get<std::vector<std::string>>(in, "elevation", "inputs"))
                    c.inputs.elevation.push_back(base_dir / p);
        }
        c.inputs.buildings = optional_path(in, "buildings", base_dir);
        c.inputs.roads = optional_path(in, "roads", base_dir);
        c.inputs.landuse = optional_path(in, "landuse", base_dir);
        c.inputs.pointcloud = optional_path(in, "pointcloud", base_dir);
        c.inputs.isolines = optional_path(in, "isolines", base_dir);
        c.inputs.volume = optional_path(in, "volume", base_dir);
        c.inputs.streamlines = optional_path(in, "streamlines", base_dir);
        if (!c.inputs.any())
            throw ConfigError("inputs: at least one input is required");

        if (j.contains("grid"))
        {
            const json& g = j.at("grid");
            reject_unknown(g, "grid", {"cell_spacing", "origin", "width", "height"});
            c.grid.cell_spacing = get<double>(g, "cell_spacing", "grid");
            if (!(c.grid.cell_spacing > 0.0) || !std::isfinite(c.grid.cell_spacing))
                throw ConfigError("grid.cell_spacing: must be positive");
            if (g.contains("origin"))
                c.grid.origin = get<std::array<double, 2>>(g, "origin", "grid");
            if (g.contains("width"))
                c.grid.width = get<std::size_t>(g, "width", "grid");
            if (g.contains("height"))
                c.grid.height = get<std::size_t>(g, "height", "grid");
            const int given = int(c.grid.origin.has_value()) + int(c.grid.width.has_value()) + int(c.grid.height.has_value());
            if (given != 0 && given != 3)
                throw ConfigError("grid: origin, width and height must be given together");
            if (given == 3 && (*c.grid.width == 0 || *c.grid.height == 0))
                throw ConfigError("grid: width and height must be positive");
        }

        c.tile_size = get_or<std::size_t>(j, "tile_size", "config", tiler::default_tile_size);
        if (c.tile_size < 2)
            throw ConfigError("config.tile_size: must be at least 2");

        if (j.contains("properties"))
        {
            const json& p = j.at("properties");
            reject_unknown(p, "properties", {"class", "value", "id"});
            c.class_key = get_or<std::string>(p, "class", "properties", c.class_key);
            c.value_key = get_or<std::string>(p, "value", "properties", c.value_key);
            c.id_key = get_or<std::string>(p, "id", "properties", c.id_key);
        }

        if (j.contains("roads"))
        {
            const json& r = j.at("roads");
            reject_unknown(r, "roads", {"classes", "widths", "sigma"});
            c.roads.classes = get<std::map<std::string, std::string>>(r, "classes", "roads");
            c.roads.widths = get<std::map<std::string, double>>(r, "widths", "roads");
            c.roads.sigma = get_or<double>(r, "sigma", "roads", c.roads.sigma);
        }
        if (c.inputs.roads)
        {
            try
            {
                raster::RoadClassWidths check(c.roads.widths);
            }
            catch (const Error& e)
            {
                throw ConfigError(fmt::format("roads.widths: {}", e.what()));
            }
            for (const auto& [label, target]: c.roads.classes)
                if (!c.roads.widths.contains(target))
                    throw ConfigError(fmt::format("roads.classes: '{}' maps to '{}', which has no width", label, target));
        }

        if (j.contains("landuse"))
        {
            const json& l = j.at("landuse");
            reject_unknown(l, "landuse", {"classes", "sigma"});
            c.landuse.classes = get<std::map<std::string, std::string>>(l, "classes", "landuse");
            c.landuse.sigma = get_or<double>(l, "sigma", "landuse", c.landuse.sigma);
            for (const auto& [label, target]: c.landuse.classes)
                if (std::find(landuse_classes.begin(), landuse_classes.end(), target) == landuse_classes.end())
                    throw ConfigError(fmt::format("landuse.classes: '{}' maps to unknown class '{}'", label, target));
        }
        if (c.roads.sigma < 0.0 || c.landuse.sigma < 0.0)
            throw ConfigError("sigma: must not be negative");

        if (j.contains("buildings"))
        {
            const json& b = j.at("buildings");
            reject_unknown(b, "buildings", {"statistic", "percentile", "fallback_height", "point_classes", "terrain_sink"});
            const auto stat = get_or<std::string>(b, "statistic", "buildings", "mean");
            if (stat == "mean")
                c.buildings.height.statistic = buildings::HeightStatistic::mean;
            else if (stat == "percentile")
                c.buildings.height.statistic = buildings::HeightStatistic::percentile;
            else
                throw ConfigError(fmt::format("buildings.statistic: unknown statistic '{}'", stat));
            c.buildings.height.percentile = get_or<double>(b, "percentile", "buildings", 90.0);
            if (!(c.buildings.height.percentile >= 0.0 && c.buildings.height.percentile <= 100.0))
                throw ConfigError("buildings.percentile: must lie in [0, 100]");
            c.buildings.height.fallback_height = get_or<double>(b, "fallback_height", "buildings", buildings::default_fallback_height);
            if (!(c.buildings.height.fallback_height > 0.0))
                throw ConfigError("buildings.fallback_height: must be positive");
            if (b.contains("point_classes"))
            {
                const auto classes = get<std::vector<int>>(b, "point_classes", "buildings");
                std::set<std::uint8_t> set;
                for (const int v: classes)
                {
                    if (v < 0 || v > 255)
                        throw ConfigError("buildings.point_classes: classes must lie in 0..255");
                    set.insert(static_cast<std::uint8_t>(v));
                }
                c.buildings.height.classes = std::move(set);
            }
            c.buildings.terrain_sink = get_or<double>(b, "terrain_sink", "buildings", buildings::default_terrain_sink);
        }

        c.colormap = default_colormap();
        if (j.contains("isolines"))
        {
            const json& i = j.at("isolines");
            reject_unknown(i, "isolines", {"colormap"});
            if (i.contains("colormap"))
                c.colormap = parse_colormap(i.at("colormap"));
        }

        if (j.contains("volume"))
        {
            const json& v = j.at("volume");
            reject_unknown(v, "volume", {"tiles", "particles", "particle_threshold"});
            if (v.contains("tiles"))
                c.volume.tiles = get<std::array<std::size_t, 2>>(v, "tiles", "volume");
            c.volume.particles = get_or<std::size_t>(v, "particles", "volume", c.volume.particles);
            c.volume.particle_threshold = get_or<double>(v, "particle_threshold", "volume", c.volume.particle_threshold);
        }

        if (j.contains("streamlines"))
        {
            const json& s = j.at("streamlines");
            reject_unknown(s, "streamlines", {"cap_vertices", "radius", "tube_sample"});
            c.streamlines.cap_vertices = get_or<std::size_t>(s, "cap_vertices", "streamlines", c.streamlines.cap_vertices);
            c.streamlines.radius = get_or<double>(s, "radius", "streamlines", c.streamlines.radius);
            c.streamlines.tube_sample = get_or<std::size_t>(s, "tube_sample", "streamlines", c.streamlines.tube_sample);
            if (c.streamlines.cap_vertices < 3)
                throw ConfigError("streamlines.cap_vertices: must be at least 3");
            if (!(c.streamlines.radius > 0.0))
                throw ConfigError("streamlines.radius: must be positive");
        }

        c.output_dir = base_dir / get_or<std::string>(j, "output_dir", "config", "out");
        c.seed = get_or<std::uint64_t>(j, "seed", "config", 0);
        return c;
    }

    PipelineConfig load_config(const fs::path& path)
    {
        json j;
        try
        {
            j = json::parse(io::read_text(path));
        }
        catch (const json::parse_error& e)
        {
            throw ConfigError(fmt::format("{}: malformed JSON at byte {}", path.string(), e.byte));
        }
        return parse_config(j, path.parent_path());
    }

    // ---- manifest ----------------------------------------------------------------------------------------------------

    json Manifest::to_json() const
    {
        json files_json = json::array();
        for (const FileEntry& f: files)
            files_json.push_back({{"path", f.path},
                                  {"role", f.role},
                                  {"format", f.format},
                                  {"quantization", f.quantization},
                                  {"layout", f.layout},
                                  {"sha256", f.sha256},
                                  {"bytes", f.bytes}});
        json sets = json::array();
        for (const auto& r: tile_sets)
            sets.push_back(tiler::to_json(r));
        json stages = json::array();
        double total = 0.0;
        for (const StageTiming& t: timings)
        {
            stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
            total += t.seconds;
        }
        json j = {{"version", manifest_version},
                  {"status", status},
                  {"seed", seed},
                  {"files", files_json},
                  {"tile_sets", sets},
                  {"warnings", warnings},
                  {"overlap_violations", overlap_violations},
                  {"timings", {{"stages", stages}, {"total_seconds", total}}}};
        if (status != "complete")
        {
            j["failed_stage"] = failed_stage;
            j["error"] = error;
        }
        return j;
    }

    Manifest Manifest::from_json(const json& j)
    {
        Manifest m;
        try
        {
            if (j.at("version").get<int>() != manifest_version)
                throw ParseError(fmt::format("manifest version {} is not supported", j.at("version").dump()));
            m.status = j.at("status").get<std::string>();
            m.seed = j.at("seed").get<std::uint64_t>();
            m.failed_stage = j.value("failed_stage", "");
            m.error = j.value("error", "");
            for (const json& f: j.at("files"))
                m.files.push_back({f.at("path").get<std::string>(), f.at("role").get<std::string>(),
                                   f.at("format").get<std::string>(), f.at("quantization"), f.at("layout"),
                                   f.at("sha256").get<std::string>(), f.at("bytes").get<std::size_t>()});
            for (const json& s: j.at("tile_sets"))
                m.tile_sets.push_back(tiler::tile_set_record_from_json(s));
            m.warnings = j.at("warnings").get<std::vector<std::string>>();
            m.overlap_violations = j.at("overlap_violations").get<std::size_t>();
            for (const json& t: j.at("timings").at("stages"))
                m.timings.push_back({t.at("stage").get<std::string>(), t.at("seconds").get<double>()});
        }
        catch (const json::exception& e)
        {
            throw ParseError(fmt::format("malformed manifest: {}", e.what()));
        }
        return m;
    }

    // ---- stage building blocks ---------------------------------------------------------------------------------------

    VectorLayer load_layer(const fs::path& path, LayerKind kind, const PipelineConfig& config)
    {
        ingest::GeoJsonOptions options;
        options.class_key = config.class_key;
        options.value_key = config.value_key;
        options.id_key = config.id_key;
        try
        {
            return ingest::parse_geojson_layer(io::read_text(path), kind, options);
        }
        catch (const IoError&)
        {
            throw;
        }
        catch (const Error& e)
        {
            throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
        }
    }

    namespace
    {
        std::string join_labels(const std::set<std::string>& labels)
        {
            std::string out;
            for (const std::string& l: labels)
                out += (out.empty() ? "'" : ", '") + l + "'";
            return out;
        }
    } // namespace

    RasterGrid road_mask(const VectorLayer& roads, const RoadConfig& config, const GridSpec& grid)
    {
        VectorLayer mapped = roads;
        std::set<std::string> unmapped;
        for (Feature& f: mapped.features)
        {
            const auto it = config.classes.find(f.class_label);
            if (it == config.classes.end())
                unmapped.insert(f.class_label);
            else
                f.class_label = it->second;
        }
        if (!unmapped.empty())
            throw ConfigError(fmt::format("road classes without a mapping: {}", join_labels(unmapped)));
        return raster::rasterize_buffered_polylines(mapped, raster::RoadClassWidths(config.widths), grid);
    }

    std::map<std::string, RasterGrid> landuse_masks(const VectorLayer& landuse, const LanduseConfig& config,
                                                    const GridSpec& grid, const RasterGrid* road)
    {
        std::map<std::string, RasterGrid> masks;
        for (const std::string& cls: landuse_classes)
            masks.emplace(cls, RasterGrid(grid, 0.0));
        std::set<std::string> unmapped;
        for (const auto& [label, target]: config.classes)
            if (!masks.contains(target))
                throw ConfigError(fmt::format("land-use label '{}' maps to unknown class '{}'", label, target));
        for (const Feature& f: landuse.features)
        {
            const auto it = config.classes.find(f.class_label);
            if (it == config.classes.end())
                unmapped.insert(f.class_label);
            else
                raster::paint_polygon(f.rings, grid, masks.at(it->second), 1.0);
        }
        if (!unmapped.empty())
            throw ConfigError(fmt::format("land-use classes without a mapping: {}", join_labels(unmapped)));
        if (road)
            for (auto& [cls, mask]: masks)
                mask = raster::subtract_clamp(mask, *road);
        return masks;
    }

    std::size_t overlap_violations(const RasterGrid& road, const std::map<std::string, RasterGrid>& masks)
    {
        std::size_t count = 0;
        for (std::size_t i = 0; i < road.values.size(); ++i)
            for (const auto& [cls, mask]: masks)
                if (road.values[i] + mask.values[i] > 1.0)
                {
                    ++count;
                    break;
                }
        return count;
    }

    // ---- run ---------------------------------------------------------------------------------------------------------

    namespace
    {
        struct Inputs
        {
            std::optional<RasterGrid> elevation;
            std::optional<VectorLayer> buildings;
            std::optional<VectorLayer> roads;
            std::optional<VectorLayer> landuse;
            std::optional<VectorLayer> isolines;
            std::optional<PointCloud> cloud;
            std::optional<Volume3D> volume;
            std::optional<std::vector<Streamline>> streamlines;
        };

        class Runner
        {
        public:
            explicit Runner(const PipelineConfig& config): config_(config) { manifest_.seed = config.seed; }

            Manifest run()
            {
                stage("ingest", [&] { ingest(); });
                if (inputs_.elevation)
                    stage("terrain", [&] { terrain(); });
                if (inputs_.roads)
                    stage("roads", [&] { roads(); });
                if (inputs_.landuse)
                    stage("landuse", [&] { landuse(); });
                if (inputs_.buildings)
                    stage("buildings", [&] { buildings(); });
                if (inputs_.isolines)
                    stage("isolines", [&] { isolines(); });
                if (inputs_.volume)
                    stage("volume", [&] { volume(); });
                if (inputs_.streamlines)
                    stage("streamlines", [&] { streamlines(); });
                write_manifest();
                return manifest_;
            }

        private:
            const PipelineConfig& config_;
            Manifest manifest_;
            Inputs inputs_;
            std::optional<GridSpec> grid_;
            std::optional<RasterGrid> terrain_;
            std::optional<RasterGrid> road_;

            const fs::path& out() const { return config_.output_dir; }

            void write_manifest() { io::write_text(out() / manifest_name, manifest_.to_json().dump(2) + "\n"); }

            void stage(const std::string& name, const std::function<void()>& body)
            {
                const auto start = std::chrono::steady_clock::now();
                try
                {
                    body();
                }
                catch (const std::exception& e)
                {
                    manifest_.status = "failed";
                    manifest_.failed_stage = name;
                    manifest_.error = e.what();
                    try
                    {
                        write_manifest();
                    }
                    catch (const std::exception&)
                    {
                    }
                    throw;
                }
                manifest_.timings.push_back(
                    {name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
            }

            void add_file(const std::string& path, std::string role, std::string format, json quantization = nullptr,
                          json layout = nullptr)
            {
                const fs::path full = out() / path;
                FileEntry e {path, std::move(role), std::move(format), std::move(quantization), std::move(layout),
                             io::sha256_file(full), static_cast<std::size_t>(fs::file_size(full))};
                manifest_.files.push_back(std::move(e));
            }

            void write_file(const std::string& path, std::span<const std::uint8_t> bytes, std::string role,
                            std::string format, json quantization = nullptr, json layout = nullptr)
            {
                io::write_bytes(out() / path, bytes);
                add_file(path, std::move(role), std::move(format), std::move(quantization), std::move(layout));
            }

            void write_text_file(const std::string& path, const std::string& text, std::string role, std::string format,
                                 json layout = nullptr)
            {
                io::write_text(out() / path, text);
                add_file(path, std::move(role), std::move(format), nullptr, std::move(layout));
            }

            void warn(std::string message) { manifest_.warnings.push_back(std::move(message)); }

            std::optional<VectorLayer> layer(const std::optional<fs::path>& path, LayerKind kind, const char* name)
            {
                if (!path)
                    return std::nullopt;
                VectorLayer l = load_layer(*path, kind, config_);
                for (const std::string& w: l.warnings)
                    warn(fmt::format("{}: {}", name, w));
                return l;
            }

            void ingest()
            {
                const InputPaths& in = config_.inputs;
                if (!in.elevation.empty())
                {
                    std::vector<RasterGrid> parts;
                    for (const fs::path& p: in.elevation)
                    {
                        try
                        {
                            parts.push_back(ingest::parse_esri_ascii_grid(io::read_text(p)));
                        }
                        catch (const ParseError& e)
                        {
                            throw ParseError(fmt::format("{}: {}", p.string(), e.what()), e.location());
                        }
                    }
                    inputs_.elevation = raster::mosaic(parts);
                }
                inputs_.buildings = layer(in.buildings, LayerKind::polygon, "buildings");
                inputs_.roads = layer(in.roads, LayerKind::polyline, "roads");
                inputs_.landuse = layer(in.landuse, LayerKind::polygon, "landuse");
                inputs_.isolines = layer(in.isolines, LayerKind::polygon, "isolines");

                std::string crs;
                for (const auto* l: {&inputs_.buildings, &inputs_.roads, &inputs_.landuse, &inputs_.isolines})
                    if (*l && !(*l)->crs_id.empty())
                    {
                        if (!crs.empty() && crs != (*l)->crs_id)
                            throw ConfigError(fmt::format("input layers disagree on CRS: '{}' vs '{}'", crs, (*l)->crs_id));
                        crs = (*l)->crs_id;
                    }

                if (in.pointcloud)
                {
                    const std::string ext = in.pointcloud->extension().string();
                    const auto format = ext == ".las" || ext == ".LAS" ? ingest::PointFormat::las : ingest::PointFormat::xyz_text;
                    inputs_.cloud = ingest::parse_point_cloud(io::read_bytes(*in.pointcloud), format);
                }
                if (in.volume)
                    inputs_.volume = ingest::read_volume(*in.volume);
                if (in.streamlines)
                    inputs_.streamlines = ingest::parse_streamlines_text(io::read_text(*in.streamlines));

                grid_ = resolve_grid();
            }

            std::optional<GridSpec> resolve_grid() const
            {
                const GridConfig& g = config_.grid;
                const double s = g.cell_spacing;
                if (g.origin)
                    return GridSpec {(*g.origin)[0], (*g.origin)[1], s, *g.width, *g.height};
                Box2 box;
                if (inputs_.elevation)
                {
                    const GridSpec& e = inputs_.elevation->spec;
                    box.extend({e.origin_x, e.origin_y});
                    box.extend({e.max_x(), e.max_y()});
                }
                else
                {
                    for (const auto* l: {&inputs_.buildings, &inputs_.roads, &inputs_.landuse, &inputs_.isolines})
                        if (*l)
                            for (const Feature& f: (*l)->features)
                            {
                                for (const Ring& r: f.rings)
                                    for (const Vec2& p: r)
                                        box.extend(p);
                                for (const Vec2& p: f.vertices)
                                    box.extend(p);
                            }
                    if (box.empty())
                        return std::nullopt;
                    box.min = {std::floor(box.min.x / s) * s, std::floor(box.min.y / s) * s};
                }
                const auto cells = [s](double extent) {
                    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(extent / s - 1e-9)));
                };
                return GridSpec {box.min.x, box.min.y, s, cells(box.max.x - box.min.x), cells(box.max.y - box.min.y)};
            }

            const GridSpec& grid() const
            {
                if (!grid_)
                    throw ConfigError("no grid could be derived from the inputs");
                return *grid_;
            }

            void write_tile_set(const RasterGrid& grid, const std::string& basename, tiler::PaddingMode padding,
                                const tiler::QuantSpec& quant, const std::string& role)
            {
                const tiler::TileSet set = tiler::retile(grid, config_.tile_size, {basename}, padding);
                for (const std::string& w: set.warnings)
                    warn(fmt::format("{}: {}", basename, w));
                const tiler::TileSetRecord record = tiler::write_tiles(set, quant, out());
                const json quant_json = tiler::to_json(record).at("quantization");
                std::size_t clamped = 0, nodata = 0;
                for (const tiler::TileFile& f: record.files)
                {
                    add_file(f.path, role, record.bit_depth() == 16 ? "png_gray16" : "png_gray8", quant_json,
                             {{"tile_set", basename}, {"col", f.col}, {"row", f.row}});
                    clamped += f.clamped;
                    nodata += f.nodata;
                }
                if (clamped > 0)
                    warn(fmt::format("{}: {} cells clamped during quantization", basename, clamped));
                if (nodata > 0)
                    warn(fmt::format("{}: {} nodata cells written as code 0", basename, nodata));
                manifest_.tile_sets.push_back(record);
            }

            RasterGrid smooth(const RasterGrid& g, double sigma) const
            {
                return sigma > 0.0 ? raster::gaussian_convolve(g, sigma, raster::default_radius(sigma)) : g;
            }

            void terrain()
            {
                terrain_ = raster::resample_to(*inputs_.elevation, grid(), raster::ResampleMethod::bilinear);
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (const double v: terrain_->values)
                    if (!terrain_->is_nodata(v))
                    {
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                if (!(lo <= hi))
                    throw PreconditionError("terrain has no valid cells inside the grid");
                if (lo == hi)
                {
                    warn("heightmap: flat terrain, height range widened by 1 m");
                    hi = lo + 1.0;
                }
                write_tile_set(*terrain_, "heightmap", tiler::PaddingMode::edge, tiler::Height16 {lo, hi}, "heightmap_tile");
            }

            void roads()
            {
                road_ = road_mask(*inputs_.roads, config_.roads, grid());
                write_tile_set(smooth(*road_, config_.roads.sigma), "mask_road", tiler::PaddingMode::zero, tiler::Mask8 {},
                               "mask_tile");
            }

            void landuse()
            {
                const auto masks = landuse_masks(*inputs_.landuse, config_.landuse, grid(), road_ ? &*road_ : nullptr);
                if (road_)
                {
                    manifest_.overlap_violations = overlap_violations(*road_, masks);
                    if (manifest_.overlap_violations > 0)
                        throw PreconditionError(
                            fmt::format("{} cells exceed road + land-use = 1 after subtraction", manifest_.overlap_violations));
                }
                for (const auto& cls: landuse_classes)
                    write_tile_set(smooth(masks.at(cls), config_.landuse.sigma), "mask_" + cls, tiler::PaddingMode::zero,
                                   tiler::Mask8 {}, "mask_tile");
            }

            void buildings()
            {
                const VectorLayer& layer = *inputs_.buildings;
                const PointCloud empty;
                const buildings::PointIndex index(inputs_.cloud ? *inputs_.cloud : empty);
                if (!terrain_)
                    warn("buildings: no terrain, footprints placed at z = 0");
                if (!inputs_.cloud)
                    warn("buildings: no point cloud, every building uses the fallback height");

                const std::size_t n = layer.features.size();
                std::vector<std::optional<NamedMesh>> meshes(n);
                std::vector<std::string> problems(n);
                std::vector<char> fallback(n, 0);
                parallel_for(n, [&](std::size_t i) {
                    const Feature& f = layer.features[i];
                    const std::string name = f.feature_id.empty() ? fmt::format("building_{}", i) : f.feature_id;
                    try
                    {
                        const buildings::Footprint fp = buildings::make_footprint(f);
                        const double base = terrain_ ? buildings::align_to_terrain(fp, *terrain_, config_.buildings.terrain_sink) : 0.0;
                        const buildings::HeightEstimate h = buildings::estimate_height(fp, index, base, config_.buildings.height);
                        fallback[i] = h.used_fallback ? 1 : 0;
                        meshes[i] = NamedMesh {name, buildings::extrude_lod1(fp, h.height, base)};
                    }
                    catch (const std::exception& e)
                    {
                        problems[i] = fmt::format("buildings: '{}' skipped: {}", name, e.what());
                    }
                });

                std::vector<NamedMesh> kept;
                std::vector<std::string> fallback_ids;
                for (std::size_t i = 0; i < n; ++i)
                {
                    if (!problems[i].empty())
                        warn(problems[i]);
                    if (meshes[i])
                    {
                        if (fallback[i])
                            fallback_ids.push_back(meshes[i]->name);
                        kept.push_back(std::move(*meshes[i]));
                    }
                }
                if (!fallback_ids.empty())
                    warn(fmt::format("buildings: fallback height used for {}", fmt::join(fallback_ids, ", ")));
                write_text_file("buildings.obj", buildings::export_obj(kept), "buildings", "obj",
                                {{"meshes", kept.size()}, {"fallback_heights", fallback_ids.size()}, {"units", "m"}});
            }

            void isolines()
            {
                const datatex::IsolinePack pack = datatex::pack_isolines(*inputs_.isolines, grid());
                if (pack.degenerate)
                    warn("isolines: every painted cell has the same value");
                const auto gray = [](const datatex::DataTexture& t, int depth) {
                    png::GrayImage img {t.width, t.height, depth, {}};
                    std::visit(
                        [&](const auto& p) {
                            using T = std::decay_t<decltype(p)>;
                            if constexpr (!std::is_same_v<T, datatex::U16Pair>)
                                img.pixels.assign(p.begin(), p.end());
                        },
                        t.payload);
                    return png::encode_gray(img);
                };
                json values_sidecar = datatex::sidecar(pack.values);
                write_file("isolines/values.png", gray(pack.values, 16), "isoline_values", "png_gray16",
                           values_sidecar.at("normalization"), values_sidecar.at("layout"));
                write_file("isolines/mask.png", gray(pack.mask, 8), "isoline_mask", "png_gray8", nullptr,
                           datatex::sidecar(pack.mask).at("layout"));
                const datatex::RgbaImage color = datatex::apply_colormap(pack.values, datatex::Colormap(config_.colormap), &pack.mask);
                write_file("isolines/colormap.png", png::encode_rgba(color.width, color.height, color.pixels),
                           "isoline_reference", "png_rgba8");
                values_sidecar["mask"] = "isolines/mask.png";
                write_text_file("isolines/values.json", values_sidecar.dump(2) + "\n", "sidecar", "json");
            }

            void volume()
            {
                const Volume3D& vol = *inputs_.volume;
                const auto [tx, ty] = config_.volume.tiles ? *config_.volume.tiles : datatex::default_fold(vol.nz);
                const datatex::DataTexture tex = datatex::zfold_encode(vol, tx, ty);
                const auto& texels = std::get<std::vector<std::uint16_t>>(tex.payload);
                json sc = datatex::sidecar(tex);
                sc["origin"] = {vol.origin.x, vol.origin.y, vol.origin.z};
                sc["cell_size"] = {vol.cell_size.x, vol.cell_size.y, vol.cell_size.z};
                write_file("volume/zfold.png", png::encode_gray({tex.width, tex.height, 16, texels}), "volume_texture",
                           "png_gray16", sc.at("normalization"), sc.at("layout"));
                write_text_file("volume/zfold.json", sc.dump(2) + "\n", "sidecar", "json");

                const auto particles = datatex::spawn_particles(vol, config_.volume.particles,
                                                                config_.volume.particle_threshold, config_.seed);
                std::vector<std::uint8_t> bytes(particles.size() * 16);
                for (std::size_t i = 0; i < particles.size(); ++i)
                {
                    const float r[4] = {static_cast<float>(particles[i].position.x), static_cast<float>(particles[i].position.y),
                                        static_cast<float>(particles[i].position.z), static_cast<float>(particles[i].value)};
                    std::memcpy(bytes.data() + 16 * i, r, 16);
                }
                write_file("volume/particles.f32", bytes, "particles", "f32le_records", nullptr,
                           {{"records", particles.size()}, {"fields", {"x", "y", "z", "value"}}, {"seed", config_.seed}});
            }

            void streamlines()
            {
                std::vector<Streamline> lines;
                const auto& raw = *inputs_.streamlines;
                for (std::size_t i = 0; i < raw.size(); ++i)
                {
                    try
                    {
                        lines.push_back(tubes::clean(raw[i]));
                    }
                    catch (const GeometryError& e)
                    {
                        warn(fmt::format("streamlines: line {} dropped: {}", i, e.what()));
                    }
                }
                if (lines.empty())
                    throw PreconditionError("no usable streamlines");

                const datatex::StreamlineTextures tex = datatex::encode_streamlines_texture(lines);
                json sc = datatex::sidecar(tex.x);
                json planes = json::object();
                const auto write_planes = [&](const datatex::DataTexture& t, const std::string& axis) {
                    const auto& pair = std::get<datatex::U16Pair>(t.payload);
                    for (const auto& [suffix, plane]: {std::pair {"hi", &pair.hi}, std::pair {"lo", &pair.lo}})
                    {
                        const std::string path = fmt::format("streamlines/{}_{}.u16", axis, suffix);
                        write_file(path, datatex::encode_raw_u16(*plane), "streamline_plane", "u16le_raw", nullptr,
                                   {{"axis", axis}, {"half", suffix}, {"width", t.width}, {"height", t.height}});
                        planes[axis][suffix] = path;
                    }
                };
                write_planes(tex.x, "x");
                write_planes(tex.y, "y");
                write_planes(tex.z, "z");
                if (tex.scalar)
                    write_planes(*tex.scalar, "scalar");
                sc["planes"] = planes;
                write_text_file("streamlines/texture.json", sc.dump(2) + "\n", "sidecar", "json");

                const StreamlineConfig& st = config_.streamlines;
                const std::size_t sample = std::min(st.tube_sample, lines.size());
                std::vector<NamedMesh> meshes(sample);
                parallel_for(sample, [&](std::size_t i) {
                    meshes[i] = {fmt::format("streamline_{:05}", i), tubes::generate_tube_mesh(lines[i], st.cap_vertices, st.radius)};
                });
                write_text_file("streamlines/tubes.obj", buildings::export_obj(meshes), "tube_sample", "obj",
                                {{"meshes", sample}, {"cap_vertices", st.cap_vertices}, {"radius", st.radius}});

                std::vector<tubes::SegmentInstance> instances;
                for (const Streamline& l: lines)
                {
                    const auto seg = tubes::generate_segment_instances(l);
                    instances.insert(instances.end(), seg.begin(), seg.end());
                }
                write_file("streamlines/instances.f32", tubes::encode_instances(instances), "segment_instances",
                           "f32le_records", nullptr,
                           {{"records", instances.size()},
                            {"record_bytes", tubes::instance_record_bytes},
                            {"fields", {"mid_x", "mid_y", "mid_z", "dir_x", "dir_y", "dir_z", "length", "scalar"}}});
            }
        };
    } // namespace

    Manifest run_pipeline(const PipelineConfig& config)
    {
        if (!config.inputs.any())
            throw ConfigError("inputs: at least one input is required");
        Runner runner(config);
        return runner.run();
    }

    // ---- bench -------------------------------------------------------------------------------------------------------

    tubes::BenchReport cmd_bench(const PipelineConfig& config, std::span<const std::size_t> counts, std::size_t runs,
                                 const fs::path& report_path)
    {
        if (!config.inputs.streamlines)
            throw ConfigError("bench needs a streamlines input");
        std::vector<Streamline> lines;
        for (const Streamline& l: ingest::parse_streamlines_text(io::read_text(*config.inputs.streamlines)))
        {
            try
            {
                lines.push_back(tubes::clean(l));
            }
            catch (const GeometryError&)
            {
            }
        }
        for (const std::size_t c: counts)
            if (c > lines.size())
                throw ConfigError(fmt::format("count {} exceeds the {} usable streamlines of the input", c, lines.size()));
        tubes::BenchOptions options;
        options.cap_vertices = config.streamlines.cap_vertices;
        options.radius = config.streamlines.radius;
        options.runs = runs;
        tubes::BenchReport report = tubes::benchmark_generation(lines, counts, options);
        io::write_text(report_path, report.to_json().dump(2) + "\n");
        return report;
    }

    // ---- validate ----------------------------------------------------------------------------------------------------

    ValidationReport cmd_validate(const fs::path& out_dir)
    {
        ValidationReport report;
        const auto fail = [&](std::string message) { report.failures.push_back(std::move(message)); };

        Manifest manifest;
        try
        {
            manifest = Manifest::from_json(json::parse(io::read_text(out_dir / manifest_name)));
        }
        catch (const json::parse_error& e)
        {
            throw ParseError(fmt::format("{}: malformed JSON at byte {}", manifest_name, e.byte), e.byte);
        }
        ++report.checks;
        if (manifest.status != "complete")
            fail(fmt::format("manifest status is '{}' (stage '{}': {})", manifest.status, manifest.failed_stage, manifest.error));

        std::set<std::string> seen;
        for (const FileEntry& f: manifest.files)
        {
            ++report.checks;
            if (!seen.insert(f.path).second)
                fail(fmt::format("{}: listed more than once", f.path));
            const fs::path full = out_dir / f.path;
            if (!fs::exists(full))
            {
                fail(fmt::format("{}: missing", f.path));
                continue;
            }
            const std::string sum = io::sha256_file(full);
            if (sum != f.sha256)
                fail(fmt::format("{}: checksum mismatch (expected {}, found {})", f.path, f.sha256, sum));
        }

        for (const tiler::TileSetRecord& r: manifest.tile_sets)
        {
            ++report.checks;
            const tiler::NamingScheme naming {r.basename};
            std::set<std::pair<std::size_t, std::size_t>> listed;
            for (const tiler::TileFile& f: r.files)
            {
                const auto parsed = naming.parse(fs::path(f.path).stem().string());
                if (!parsed || parsed->first != f.col || parsed->second != f.row)
                    fail(fmt::format("tile set '{}': file {} does not match its index ({}, {})", r.basename, f.path, f.col, f.row));
                listed.insert({f.col, f.row});
            }
            bool dense = true;
            for (std::size_t row = 0; row < r.tiles_y; ++row)
                for (std::size_t col = 0; col < r.tiles_x; ++col)
                {
                    const std::string name = naming.name(col, row);
                    const fs::path path = fs::path(r.basename) / (name + ".png");
                    if (!listed.contains({col, row}) || !fs::exists(out_dir / path))
                    {
                        dense = false;
                        fail(fmt::format("tile set '{}': dense rectangle broken, tile {} is missing", r.basename, name));
                    }
                }
            if (listed.size() != r.tiles_x * r.tiles_y)
            {
                dense = false;
                fail(fmt::format("tile set '{}': {} tiles listed, expected {}", r.basename, listed.size(), r.tiles_x * r.tiles_y));
            }
            if (!dense)
                continue;
            try
            {
                const RasterGrid grid = tiler::reassemble(tiler::read_tiles(r, out_dir));
                ++report.checks;
                if (grid.width() != r.valid_width || grid.height() != r.valid_height)
                    fail(fmt::format("tile set '{}': reassembled to {}x{}, expected {}x{}", r.basename, grid.width(),
                                     grid.height(), r.valid_width, r.valid_height));
                double lo = 0.0, hi = 1.0;
                if (const auto* h = std::get_if<tiler::Height16>(&r.quantization))
                {
                    lo = h->z_min;
                    hi = h->z_max;
                }
                const double slack = 0.5 * tiler::quantization_step(r.quantization);
                std::size_t outside = 0;
                for (const double v: grid.values)
                    if (!grid.is_nodata(v) && (v < lo - slack || v > hi + slack))
                        ++outside;
                if (outside > 0)
                    fail(fmt::format("tile set '{}': {} cells outside [{}, {}]", r.basename, outside, lo, hi));
            }
            catch (const std::exception& e)
            {
                fail(fmt::format("tile set '{}': {}", r.basename, e.what()));
            }
        }

        for (const FileEntry& f: manifest.files)
        {
            if (f.format != "obj" || !fs::exists(out_dir / f.path))
                continue;
            try
            {
                const auto meshes = parse_obj(io::read_text(out_dir / f.path));
                for (const NamedMesh& m: meshes)
                {
                    ++report.checks;
                    const ManifoldReport mr = analyze_manifold(m.mesh);
                    if (!mr.closed_manifold())
                        fail(fmt::format("{}: mesh '{}' is not a closed manifold (open edges {}, misoriented {}, degenerate {}, "
                                         "euler {})",
                                         f.path, m.name, mr.boundary_or_nonmanifold_edges, mr.misoriented_edges,
                                         mr.degenerate_triangles, mr.euler_characteristic()));
                    else if (!(signed_volume(m.mesh) > 0.0))
                        fail(fmt::format("{}: mesh '{}' has non-positive volume", f.path, m.name));
                }
            }
            catch (const std::exception& e)
            {
                fail(fmt::format("{}: {}", f.path, e.what()));
            }
        }

        if (manifest.overlap_violations > 0)
            fail(fmt::format("{} cells violate road + land-use <= 1", manifest.overlap_violations));
        return report;
    }
} // namespace worldgen::pipeline
