#include "worldgen/sample.hpp"

#include "worldgen/datatex.hpp"
#include "worldgen/geometry.hpp"
#include "worldgen/ingest.hpp"
#include "worldgen/io.hpp"
#include "worldgen/tubes.hpp"
#include "worldgen/types.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace worldgen::sample
{
    using nlohmann::json;
    namespace fs = std::filesystem;

    namespace
    {
        constexpr double extent_x = 2000.0;
        constexpr double extent_y = 1000.0;
        constexpr double pi = std::numbers::pi;

        class Draws
        {
        public:
            explicit Draws(std::uint64_t seed): rng_(seed) {}
            double uniform() { return rng_.uniform(counter_++); }
            double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
            std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n))); }

        private:
            datatex::CounterRng rng_;
            std::uint64_t counter_ {0};
        };

        double cm(double v) { return std::round(v * 100.0) / 100.0; }

        json position(Vec2 p) { return json::array({cm(p.x), cm(p.y)}); }

        json polygon_feature(const Ring& ring, const std::string& cls, const std::string& id)
        {
            json coords = json::array();
            for (const Vec2& p: ring)
                coords.push_back(position(p));
            coords.push_back(position(ring.front()));
            return {{"type", "Feature"},
                    {"properties", {{"class", cls}, {"id", id}}},
                    {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({coords})}}}};
        }

        json line_feature(const std::vector<Vec2>& line, const std::string& cls, const std::string& id)
        {
            json coords = json::array();
            for (const Vec2& p: line)
                coords.push_back(position(p));
            return {{"type", "Feature"},
                    {"properties", {{"class", cls}, {"id", id}}},
                    {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}};
        }

        json collection(json features)
        {
            return {{"type", "FeatureCollection"},
                    {"crs", {{"type", "name"}, {"properties", {{"name", "EPSG:25832"}}}}},
                    {"features", std::move(features)}};
        }

        template <typename Fn>
        std::vector<Vec2> trace(double t0, double t1, double step, Fn&& at)
        {
            std::vector<Vec2> out;
            const auto n = static_cast<std::size_t>(std::ceil(std::abs(t1 - t0) / step));
            for (std::size_t k = 0; k <= n; ++k)
                out.push_back(at(t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n)));
            return out;
        }

        Ring blob(Vec2 center, double rx, double ry, std::size_t n, double wobble, Draws& draws)
        {
            Ring ring;
            const double phase = draws.uniform(0.0, 2.0 * pi);
            for (std::size_t k = 0; k < n; ++k)
            {
                const double a = 2.0 * pi * static_cast<double>(k) / static_cast<double>(n);
                const double f = 1.0 + wobble * std::sin(3.0 * a + phase);
                ring.push_back({center.x + rx * f * std::cos(a), center.y + ry * f * std::sin(a)});
            }
            return ring;
        }

        void write_elevation(const fs::path& dir)
        {
            for (const auto& [name, x0]: {std::pair {"elevation_west.asc", 0.0}, std::pair {"elevation_east.asc", 1000.0}})
            {
                RasterGrid g(GridSpec {x0, 0.0, 2.0, 500, 500});
                for (std::size_t r = 0; r < g.height(); ++r)
                    for (std::size_t c = 0; c < g.width(); ++c)
                        g.at(c, r) = cm(terrain_height(g.spec.center_x(c), g.spec.center_y(r)));
                io::write_text(dir / name, ingest::write_esri_ascii_grid(g));
            }
        }

        json roads(Draws& draws)
        {
            json features = json::array();
            int id = 0;
            const auto add = [&](const std::vector<Vec2>& line, const char* cls) {
                features.push_back(line_feature(line, cls, "road_" + std::to_string(id++)));
            };
            add(trace(0, extent_x, 20, [](double t) { return Vec2 {t, 180 + 30 * std::sin(t / 200)}; }), "motorway");
            add(trace(0, extent_y, 20, [](double t) { return Vec2 {600 + 20 * std::sin(t / 150), t}; }), "trunk");
            add(trace(0, 1, 0.02, [](double t) { return Vec2 {1400 + 600 * t, 300 + 600 * t}; }), "primary");
            add(trace(600, extent_x, 20, [](double t) { return Vec2 {t, 850 + 10 * std::sin(t / 90)}; }), "secondary");
            add(trace(0, 850, 20, [](double t) { return Vec2 {1700 + 15 * std::cos(t / 120), t}; }), "tertiary");
            for (int k = 0; k <= 5; ++k)
            {
                const double v = 300 + 100 * k;
                add(trace(900, 1400, 25, [v](double t) { return Vec2 {t, v}; }), "residential");
                add(trace(300, 800, 25, [v](double t) { return Vec2 {v + 600, t}; }), "residential");
            }
            for (int k = 0; k < 4; ++k)
            {
                const double x = 950 + 100 * k + draws.uniform(-10, 10);
                add(trace(0, 1, 0.25, [x](double t) { return Vec2 {x, 300 - 60 * t}; }), "service");
            }
            for (int k = 0; k < 3; ++k)
            {
                const double y0 = 300 + 200 * k;
                const double phase = draws.uniform(0, 2 * pi);
                add(trace(20, 560, 20, [=](double t) { return Vec2 {t, y0 + 40 * std::sin(t / 80 + phase)}; }),
                    k == 1 ? "footway" : "track");
            }
            return collection(std::move(features));
        }

        json landuse(Draws& draws)
        {
            json features = json::array();
            int id = 0;
            const auto add = [&](const Ring& ring, const std::string& cls) {
                features.push_back(polygon_feature(ring, cls, "landuse_" + std::to_string(id++)));
            };
            for (int row = 0; row < 5; ++row)
                for (int col = 0; col < 10; ++col)
                {
                    const double x0 = 200.0 * col, y0 = 200.0 * row;
                    const bool urban = x0 >= 800 && x0 < 1400 && y0 >= 200 && y0 < 800;
                    const bool forest = x0 < 600;
                    const bool farm = x0 >= 1400;
                    static const std::vector<std::string> urban_labels {"residential", "commercial", "industrial"};
                    static const std::vector<std::string> forest_labels {"forest", "wood"};
                    static const std::vector<std::string> farm_labels {"farmland", "orchard", "vineyard"};
                    static const std::vector<std::string> open_labels {"meadow", "grass"};
                    const auto& labels = urban ? urban_labels : forest ? forest_labels : farm ? farm_labels : open_labels;
                    add({{x0, y0}, {x0 + 200, y0}, {x0 + 200, y0 + 200}, {x0, y0 + 200}}, labels[draws.index(labels.size())]);
                }
            add(blob({300, 700}, 130, 90, 40, 0.12, draws), "lake");
            add(blob({1750, 150}, 70, 50, 32, 0.1, draws), "reservoir");
            Ring river = trace(0, 600, 20, [](double t) { return Vec2 {t, 60 + 15 * std::sin(t / 70)}; });
            const Ring bank = trace(600, 0, 20, [](double t) { return Vec2 {t, 78 + 15 * std::sin(t / 70)}; });
            river.insert(river.end(), bank.begin(), bank.end());
            add(river, "river");
            return collection(std::move(features));
        }

        struct Building
        {
            Ring ring;
            double height {};
            bool scanned {true};
        };

        std::vector<Building> buildings(Draws& draws)
        {
            std::vector<Building> out;
            for (int by = 0; by < 5; ++by)
                for (int bx = 0; bx < 5; ++bx)
                    for (int side = -1; side <= 1; side += 2)
                    {
                        const Vec2 c {950.0 + 100 * bx + 22.0 * side, 350.0 + 100 * by + draws.uniform(-8, 8)};
                        const double w = draws.uniform(12, 24), d = draws.uniform(10, 18);
                        const double a = draws.uniform(-0.3, 0.3);
                        Ring local;
                        if (out.size() % 4 == 3)
                            local = {{-w / 2, -d / 2}, {w / 2, -d / 2}, {w / 2, 0}, {0, 0}, {0, d / 2}, {-w / 2, d / 2}};
                        else
                            local = {{-w / 2, -d / 2}, {w / 2, -d / 2}, {w / 2, d / 2}, {-w / 2, d / 2}};
                        Building b;
                        for (const Vec2& p: local)
                            b.ring.push_back({c.x + p.x * std::cos(a) - p.y * std::sin(a), c.y + p.x * std::sin(a) + p.y * std::cos(a)});
                        for (Vec2& p: b.ring)
                            p = {cm(p.x), cm(p.y)};
                        b.height = draws.uniform(4, 24);
                        b.scanned = out.size() != 17;
                        out.push_back(std::move(b));
                    }
            return out;
        }

        PointCloud scan(const std::vector<Building>& list, Draws& draws)
        {
            PointCloud cloud;
            for (const Building& b: list)
            {
                const Box2 box = bounds(b.ring);
                const Vec2 c {(box.min.x + box.max.x) / 2, (box.min.y + box.max.y) / 2};
                const double roof = terrain_height(c.x, c.y) + b.height;
                for (double y = box.min.y - 5; y <= box.max.y + 5; y += 1.0)
                    for (double x = box.min.x - 5; x <= box.max.x + 5; x += 1.0)
                    {
                        const Vec2 p {x + draws.uniform(-0.3, 0.3), y + draws.uniform(-0.3, 0.3)};
                        const double noise = draws.uniform(-0.05, 0.05);
                        if (ring_contains(b.ring, p))
                        {
                            if (b.scanned)
                            {
                                cloud.points.push_back({p.x, p.y, roof + noise});
                                cloud.classification.push_back(6);
                            }
                        }
                        else
                        {
                            cloud.points.push_back({p.x, p.y, terrain_height(p.x, p.y) + noise});
                            cloud.classification.push_back(2);
                        }
                    }
            }
            return cloud;
        }

        json isolines(Draws& draws)
        {
            json features = json::array();
            int id = 0;
            for (const auto& [center, levels, top]: {std::tuple {Vec2 {1650, 450}, 6, 150.0}, std::tuple {Vec2 {300, 300}, 4, 135.0}})
                for (int k = 0; k < levels; ++k)
                {
                    json f = polygon_feature(blob(center, 40.0 + 35 * k, 30.0 + 25 * k, 48, 0.06, draws), "contour",
                                             "isoline_" + std::to_string(id++));
                    f["properties"]["value"] = top - 5.0 * k;
                    features.push_back(std::move(f));
                }
            return collection(std::move(features));
        }

        Volume3D plume()
        {
            Volume3D v(32, 32, 32);
            v.origin = {900, 300, 0};
            v.cell_size = {20, 20, 4};
            for (std::size_t z = 0; z < 32; ++z)
                for (std::size_t y = 0; y < 32; ++y)
                    for (std::size_t x = 0; x < 32; ++x)
                    {
                        const double dx = static_cast<double>(x) - 10.0 - 0.3 * static_cast<double>(z);
                        const double dy = static_cast<double>(y) - 14.0;
                        const double value = std::exp(-(dx * dx + dy * dy) / 60.0) * std::exp(-static_cast<double>(z) / 18.0);
                        v.at(x, y, z) = static_cast<float>(100.0 * value);
                    }
            return v;
        }
    } // namespace

    double terrain_height(double x, double y) noexcept
    {
        const double hill = std::exp(-((x - 1650) * (x - 1650) + (y - 450) * (y - 450)) / (2 * 160.0 * 160.0));
        return 120.0 + 12.0 * std::sin(x / 310.0) * std::cos(y / 270.0) + 0.01 * x + 25.0 * hill;
    }

    fs::path write_sample_dataset(const fs::path& dir, std::uint64_t seed)
    {
        Draws draws(seed);
        write_elevation(dir);
        io::write_text(dir / "roads.geojson", roads(draws).dump() + "\n");
        io::write_text(dir / "landuse.geojson", landuse(draws).dump() + "\n");

        const std::vector<Building> list = buildings(draws);
        json footprints = json::array();
        for (std::size_t i = 0; i < list.size(); ++i)
            footprints.push_back(polygon_feature(list[i].ring, "building", "building_" + std::to_string(i)));
        io::write_text(dir / "buildings.geojson", collection(std::move(footprints)).dump() + "\n");
        io::write_bytes(dir / "pointcloud.las", ingest::encode_las(scan(list, draws)));

        io::write_text(dir / "isolines.geojson", isolines(draws).dump() + "\n");
        ingest::write_volume(dir / "volume.json", plume());

        std::vector<Streamline> lines = tubes::synthetic_streamlines(100, 150, seed);
        for (Streamline& l: lines)
            for (Vec3f& p: l.points)
                p = {p.x + 900.0f, p.y + 300.0f, p.z};
        io::write_text(dir / "streamlines.txt", ingest::write_streamlines_text(lines));

        const json config = {
            {"version", 1},
            {"inputs",
             {{"elevation", {"elevation_west.asc", "elevation_east.asc"}},
              {"buildings", "buildings.geojson"},
              {"roads", "roads.geojson"},
              {"landuse", "landuse.geojson"},
              {"pointcloud", "pointcloud.las"},
              {"isolines", "isolines.geojson"},
              {"volume", "volume.json"},
              {"streamlines", "streamlines.txt"}}},
            {"grid", {{"cell_spacing", 1.0}}},
            {"tile_size", 505},
            {"roads",
             {{"classes",
               {{"motorway", "major"},
                {"trunk", "major"},
                {"primary", "major"},
                {"secondary", "secondary"},
                {"tertiary", "secondary"},
                {"residential", "local"},
                {"service", "local"},
                {"track", "path"},
                {"footway", "path"}}},
              {"widths", {{"major", 12.0}, {"secondary", 8.0}, {"local", 5.0}, {"path", 2.5}}},
              {"sigma", 1.0}}},
            {"landuse",
             {{"classes",
               {{"lake", "water"},
                {"river", "water"},
                {"reservoir", "water"},
                {"forest", "forest"},
                {"wood", "forest"},
                {"farmland", "farm"},
                {"orchard", "farm"},
                {"vineyard", "farm"},
                {"residential", "urban"},
                {"commercial", "urban"},
                {"industrial", "urban"},
                {"meadow", "open"},
                {"grass", "open"}}},
              {"sigma", 2.0}}},
            {"buildings", {{"statistic", "mean"}, {"point_classes", {6}}, {"fallback_height", 3.0}}},
            {"volume", {{"particles", 2000}, {"particle_threshold", 1.0}}},
            {"streamlines", {{"cap_vertices", 8}, {"radius", 0.5}, {"tube_sample", 10}}},
            {"output_dir", "out"},
            {"seed", seed},
        };
        const fs::path config_path = dir / "config.json";
        io::write_text(config_path, config.dump(2) + "\n");
        return config_path;
    }
} // namespace worldgen::sample
