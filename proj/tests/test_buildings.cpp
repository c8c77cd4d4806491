#include "support.hpp"

#include "worldgen/buildings.hpp"
#include "worldgen/error.hpp"
#include "worldgen/mesh.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace worldgen;
using namespace worldgen::buildings;

namespace
{
    Feature feature(std::vector<Ring> rings, std::string id = "b")
    {
        Feature f;
        f.rings = std::move(rings);
        f.class_label = "building";
        f.feature_id = std::move(id);
        return f;
    }

    void check_triangulation(const Ring& ring)
    {
        const auto tris = triangulate_ear_clipping(ring);
        REQUIRE(tris.size() == ring.size() - 2);
        double sum = 0.0;
        for (const auto& t: tris)
        {
            const double a = 0.5 * cross(ring[t[1]] - ring[t[0]], ring[t[2]] - ring[t[0]]);
            CHECK(a > 0.0);
            sum += a;
        }
        CHECK(sum == doctest::Approx(testing::shoelace(ring)).epsilon(1e-9));
    }
} // namespace

TEST_CASE("footprints are pruned, oriented and validated")
{
    const Footprint cw = make_footprint(feature({{{0, 0}, {0, 4}, {2, 4}, {4, 4}, {4, 0}, {4, 0}}}));
    CHECK(cw.exterior.size() == 4);
    CHECK(cw.area() == doctest::Approx(16.0));
    CHECK_THROWS_AS(make_footprint(feature({{{0, 0}, {4, 0}, {4, 4}, {0, 4}}, {{1, 1}, {2, 1}, {2, 2}}})), GeometryError);
    CHECK_THROWS_AS(make_footprint(feature({{{0, 0}, {4, 4}, {4, 0}, {0, 4}}})), GeometryError);
    CHECK_THROWS_AS(make_footprint(feature({{{0, 0}, {1, 1}, {2, 2}}})), GeometryError);
}

TEST_CASE("ear clipping covers the polygon with counterclockwise triangles")
{
    check_triangulation({{0, 0}, {1, 0}, {0, 1}});
    check_triangulation({{0, 0}, {4, 0}, {4, 1}, {1, 1}, {1, 4}, {0, 4}});
    check_triangulation({{0, 0}, {6, 0}, {6, 5}, {5, 5}, {5, 1}, {4, 1}, {4, 5}, {3, 5}, {3, 1}, {2, 1}, {2, 5}, {0, 5}});
    testing::Gen g(61);
    for (int trial = 0; trial < 200; ++trial)
        check_triangulation(testing::random_star_polygon(g, g.index(3, 60), {g.uniform(-5e5, 5e5), g.uniform(0, 6e6)}, 2, 30));
    for (int trial = 0; trial < 200; ++trial)
    {
        const Footprint fp = make_footprint(
            feature({testing::random_histogram_polygon(g, g.index(1, 12), g.uniform(0, 6.3), {g.uniform(-1e3, 1e3), g.uniform(-1e3, 1e3)})}));
        check_triangulation(fp.exterior);
    }
}

TEST_CASE("ear clipping survives a vertex lying almost on a diagonal")
{
    // Rounded L-shape whose reflex corner sits a hair off the chord between its neighbours' neighbours.
    check_triangulation({{1062.45, 353.09}, {1078.74, 349.49}, {1080.15, 355.86}, {1072.0, 357.66}, {1073.41, 364.03}, {1065.26, 365.83}});
}

TEST_CASE("LoD1 prism counts, manifoldness and volume")
{
    testing::Gen g(62);
    for (int trial = 0; trial < 100; ++trial)
    {
        const Ring ring = trial % 2 == 0 ? testing::random_star_polygon(g, g.index(3, 30), {g.uniform(0, 1e5), g.uniform(0, 1e5)}, 3, 25)
                                         : testing::random_histogram_polygon(g, g.index(1, 10), g.uniform(0, 6.3), {g.uniform(0, 1e4), 0});
        const Footprint fp = make_footprint(feature({ring}));
        const double h = g.uniform(2, 60), base = g.uniform(-10, 500);
        const TriangleMesh m = extrude_lod1(fp, h, base);
        const std::size_t n = fp.exterior.size();
        CHECK(m.vertices.size() == 2 * n);
        CHECK(m.triangles.size() == 4 * n - 4);
        const ManifoldReport r = analyze_manifold(m);
        CHECK(r.closed_manifold());
        CHECK(r.euler_characteristic() == 2);
        CHECK(signed_volume(m) == doctest::Approx(std::abs(testing::shoelace(fp.exterior)) * h).epsilon(1e-9));
        const auto [lo, hi] = std::minmax_element(m.vertices.begin(), m.vertices.end(),
                                                  [](const Vec3& a, const Vec3& b) { return a.z < b.z; });
        CHECK(lo->z == base);
        CHECK(hi->z == base + h);
    }
    const Footprint sq = make_footprint(feature({{{0, 0}, {1, 0}, {1, 1}, {0, 1}}}));
    CHECK_THROWS_AS(extrude_lod1(sq, 0.0, 0.0), PreconditionError);
}

TEST_CASE("point index candidates are a superset of the points in a box")
{
    testing::Gen g(63);
    PointCloud cloud;
    for (int i = 0; i < 3000; ++i)
        cloud.points.push_back({g.uniform(0, 200), g.uniform(0, 100), 0});
    const PointIndex index(cloud, 7.0);
    for (int trial = 0; trial < 50; ++trial)
    {
        Box2 box;
        box.extend({g.uniform(-20, 220), g.uniform(-20, 120)});
        box.extend({g.uniform(-20, 220), g.uniform(-20, 120)});
        auto c = index.candidates(box);
        std::sort(c.begin(), c.end());
        for (std::size_t i = 0; i < cloud.points.size(); ++i)
        {
            const Vec3& p = cloud.points[i];
            if (p.x >= box.min.x && p.x <= box.max.x && p.y >= box.min.y && p.y <= box.max.y)
                CHECK(std::binary_search(c.begin(), c.end(), i));
        }
    }
}

TEST_CASE("height statistics, class filter and fallback")
{
    const Footprint fp = make_footprint(feature({{{0, 0}, {10, 0}, {10, 10}, {0, 10}}}));
    PointCloud cloud;
    for (int i = 0; i < 10; ++i)
    {
        cloud.points.push_back({1.0 + i * 0.8, 5, 110.0 + i});
        cloud.classification.push_back(6);
    }
    cloud.points.push_back({5, 5, 500});
    cloud.classification.push_back(7); // noise class
    cloud.points.push_back({50, 50, 900});
    cloud.classification.push_back(6); // outside the footprint
    const PointIndex index(cloud);

    HeightOptions mean;
    mean.classes = std::set<std::uint8_t> {6};
    const HeightEstimate m = estimate_height(fp, index, 100.0, mean);
    CHECK(m.points_used == 10);
    CHECK(m.height == doctest::Approx(14.5));
    CHECK_FALSE(m.used_fallback);

    HeightOptions p90 = mean;
    p90.statistic = HeightStatistic::percentile;
    CHECK(estimate_height(fp, index, 100.0, p90).height == doctest::Approx(118.1 - 100.0));

    HeightOptions unfiltered;
    CHECK(estimate_height(fp, index, 100.0, unfiltered).points_used == 11);

    const HeightEstimate below = estimate_height(fp, index, 200.0, mean);
    CHECK(below.used_fallback);
    CHECK(below.height == default_fallback_height);

    const Footprint empty = make_footprint(feature({{{300, 300}, {310, 300}, {310, 310}}}));
    const HeightEstimate none = estimate_height(empty, index, 0.0, mean);
    CHECK(none.used_fallback);
    CHECK(none.points_used == 0);
}

TEST_CASE("height estimate is invariant under point permutation")
{
    testing::Gen g(64);
    const Footprint fp = make_footprint(feature({testing::random_star_polygon(g, 12, {50, 50}, 10, 30)}));
    PointCloud cloud;
    for (int i = 0; i < 2000; ++i)
    {
        cloud.points.push_back({g.uniform(0, 100), g.uniform(0, 100), g.uniform(100, 130)});
        cloud.classification.push_back(6);
    }
    const double reference = estimate_height(fp, PointIndex(cloud), 95.0).height;
    for (int trial = 0; trial < 5; ++trial)
    {
        std::vector<std::size_t> perm(cloud.points.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), std::mt19937_64(trial));
        PointCloud shuffled;
        for (std::size_t i: perm)
        {
            shuffled.points.push_back(cloud.points[i]);
            shuffled.classification.push_back(cloud.classification[i]);
        }
        CHECK(estimate_height(fp, PointIndex(shuffled), 95.0).height == doctest::Approx(reference).epsilon(1e-12));
    }
}

TEST_CASE("terrain alignment takes the lowest sample and sinks the base")
{
    RasterGrid terrain(GridSpec {0, 0, 1, 50, 50});
    for (std::size_t r = 0; r < 50; ++r)
        for (std::size_t c = 0; c < 50; ++c)
            terrain.at(c, r) = 100.0 + 0.5 * terrain.spec.center_x(c) + 0.25 * terrain.spec.center_y(r);
    const Footprint fp = make_footprint(feature({{{10.5, 20.5}, {30.5, 20.5}, {30.5, 40.5}, {10.5, 40.5}}}));
    CHECK(align_to_terrain(fp, terrain) == doctest::Approx(100.0 + 5.25 + 5.125 - default_terrain_sink));
    CHECK(align_to_terrain(fp, terrain, 0.0) == doctest::Approx(110.375));
    const Footprint outside = make_footprint(feature({{{45, 45}, {55, 45}, {55, 55}}}));
    CHECK_THROWS_AS(align_to_terrain(outside, terrain), GeometryError);
}

TEST_CASE("OBJ export is ordered, one-based and parses back")
{
    const Footprint a = make_footprint(feature({{{0, 0}, {2, 0}, {2, 2}, {0, 2}}}, "zeta"));
    const Footprint b = make_footprint(feature({{{5, 5}, {7, 5}, {6, 8}}}, "alpha house"));
    const std::vector<NamedMesh> meshes {{"zeta", extrude_lod1(a, 3, 0)}, {"alpha house", extrude_lod1(b, 4, 1)}};
    const std::string obj = export_obj(meshes);
    CHECK(obj.rfind("# worldgen OBJ export", 0) == 0);
    CHECK(obj.find("o alpha_house") < obj.find("o zeta"));
    CHECK(obj.find("f 0 ") == std::string::npos);
    const auto back = parse_obj(obj);
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "alpha_house");
    CHECK(back[0].mesh.vertices.size() == 6);
    CHECK(back[1].mesh.triangles.size() == meshes[0].mesh.triangles.size());
    for (const auto& m: back)
        CHECK(analyze_manifold(m.mesh).closed_manifold());
    CHECK(signed_volume(back[1].mesh) == doctest::Approx(12.0));
}

TEST_CASE("manifold analysis detects holes and flipped faces")
{
    const Footprint fp = make_footprint(feature({{{0, 0}, {2, 0}, {2, 2}, {0, 2}}}));
    TriangleMesh m = extrude_lod1(fp, 1, 0);
    TriangleMesh open = m;
    open.triangles.pop_back();
    CHECK(analyze_manifold(open).boundary_or_nonmanifold_edges == 3);
    CHECK_FALSE(analyze_manifold(open).closed_manifold());
    TriangleMesh flipped = m;
    std::swap(flipped.triangles[0][1], flipped.triangles[0][2]);
    CHECK(analyze_manifold(flipped).misoriented_edges > 0);
    TriangleMesh bad = m;
    bad.triangles[0][0] = 99;
    CHECK_FALSE(analyze_manifold(bad).indices_in_range);
}
