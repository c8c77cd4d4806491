#include "support.hpp"

#include "worldgen/datatex.hpp"
#include "worldgen/error.hpp"
#include "worldgen/ingest.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <set>

using namespace worldgen;
using namespace worldgen::datatex;

namespace
{
    Volume3D random_volume(testing::Gen& g, std::size_t nx, std::size_t ny, std::size_t nz)
    {
        Volume3D v(nx, ny, nz);
        for (float& x: v.values)
            x = static_cast<float>(g.uniform(-50, 250));
        return v;
    }

    /// Eight-corner weighted sum with explicit weights.
    double trilinear_oracle(const Volume3D& v, double x, double y, double z)
    {
        double sum = 0.0;
        for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                {
                    const double cx = std::floor(x) + dx, cy = std::floor(y) + dy, cz = std::floor(z) + dz;
                    const double w = (1 - std::abs(x - cx)) * (1 - std::abs(y - cy)) * (1 - std::abs(z - cz));
                    if (w <= 0.0)
                        continue;
                    sum += w * v.at(static_cast<std::size_t>(cx), static_cast<std::size_t>(cy), static_cast<std::size_t>(cz));
                }
        return sum;
    }

    Feature ring_feature(double half, double value, std::string id)
    {
        Feature f;
        f.rings = {{{-half, -half}, {half, -half}, {half, half}, {-half, half}}};
        f.value = value;
        f.feature_id = std::move(id);
        return f;
    }
} // namespace

TEST_CASE("z-fold mapping is a bijection between voxels and used texels")
{
    testing::Gen g(71);
    for (int trial = 0; trial < 30; ++trial)
    {
        const std::size_t nx = g.index(1, 9), ny = g.index(1, 9), nz = g.index(1, 30);
        const auto [tx, ty] = default_fold(nz);
        CHECK(tx * ty >= nz);
        CHECK((tx - 1) * (tx - 1) < nz);
        const ZFoldLayout layout {tx, ty, nx, ny, nz};
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (std::size_t z = 0; z < nz; ++z)
            for (std::size_t y = 0; y < ny; ++y)
                for (std::size_t x = 0; x < nx; ++x)
                {
                    const auto [u, v] = layout.texel_of(x, y, z);
                    CHECK(u < layout.width());
                    CHECK(v < layout.height());
                    CHECK(seen.insert({u, v}).second);
                    const auto back = layout.voxel_of(u, v);
                    REQUIRE(back);
                    CHECK(*back == std::array {x, y, z});
                }
        std::size_t unused = 0;
        for (std::size_t v = 0; v < layout.height(); ++v)
            for (std::size_t u = 0; u < layout.width(); ++u)
                unused += layout.voxel_of(u, v) ? 0 : 1;
        CHECK(unused == layout.width() * layout.height() - nx * ny * nz);
    }
}

TEST_CASE("z-fold encode and decode stay within half a quantization step")
{
    testing::Gen g(72);
    for (int trial = 0; trial < 10; ++trial)
    {
        const Volume3D vol = random_volume(g, g.index(2, 12), g.index(2, 12), g.index(1, 20));
        const auto [tx, ty] = default_fold(vol.nz);
        const DataTexture tex = zfold_encode(vol, tx, ty);
        tex.check();
        const Volume3D back = zfold_decode(tex);
        const double step = (tex.normalization->max - tex.normalization->min) / 65535.0;
        for (std::size_t i = 0; i < vol.values.size(); ++i)
            CHECK(std::abs(back.values[i] - vol.values[i]) <= 0.5 * step + 1e-4);
    }
    Volume3D small(2, 2, 5);
    CHECK_THROWS_AS(zfold_encode(small, 2, 2), PreconditionError);
}

TEST_CASE("z-fold sampler matches a trilinear oracle")
{
    testing::Gen g(73);
    const Volume3D vol = random_volume(g, 9, 7, 11);
    const auto [tx, ty] = default_fold(vol.nz);
    const DataTexture tex = zfold_encode(vol, tx, ty);
    const double step = (tex.normalization->max - tex.normalization->min) / 65535.0;
    SamplerStats stats;
    for (int k = 0; k < 2000; ++k)
    {
        const double x = g.uniform(0, 8), y = g.uniform(0, 6), z = g.uniform(0, 10);
        const double oracle = trilinear_oracle(vol, x, y, z);
        CHECK(sample_trilinear(vol, x, y, z) == doctest::Approx(oracle).epsilon(1e-9));
        CHECK(std::abs(zfold_sample(tex, x, y, z, &stats) - oracle) <= step);
    }
    CHECK(stats.samples == 2000);
    CHECK(stats.clamped == 0);
    CHECK(zfold_sample(tex, -3, 2, 2, &stats) == doctest::Approx(zfold_sample(tex, 0, 2, 2)));
    CHECK(zfold_sample(tex, 2, 2, 99, &stats) == doctest::Approx(zfold_sample(tex, 2, 2, 10)));
    CHECK(stats.clamped == 2);
    CHECK(std::abs(zfold_sample(tex, 3, 4, 5) - vol.at(3, 4, 5)) <= step);
}

TEST_CASE("hi/lo split is lossless for every bit pattern class")
{
    testing::Gen g(74);
    const float specials[] = {0.0f, -0.0f, std::numeric_limits<float>::infinity(), -std::numeric_limits<float>::infinity(),
                              std::numeric_limits<float>::denorm_min(), std::numeric_limits<float>::max(),
                              std::numeric_limits<float>::lowest(), std::numeric_limits<float>::quiet_NaN()};
    for (float v: specials)
    {
        const SplitF32 s = split_f32(v);
        CHECK(std::bit_cast<std::uint32_t>(merge_f32(s.hi, s.lo)) == std::bit_cast<std::uint32_t>(v));
    }
    for (int k = 0; k < 100000; ++k)
    {
        const std::uint32_t bits = g.bits32();
        const SplitF32 s = split_f32(std::bit_cast<float>(bits));
        CHECK(std::bit_cast<std::uint32_t>(merge_f32(s.hi, s.lo)) == bits);
    }
}

TEST_CASE("streamline textures round-trip exactly with padding")
{
    testing::Gen g(75);
    std::vector<Streamline> lines;
    for (int i = 0; i < 25; ++i)
    {
        Streamline s;
        const std::size_t n = g.index(2, 40);
        for (std::size_t k = 0; k < n; ++k)
        {
            s.points.push_back({static_cast<float>(g.uniform(-1e5, 1e5)), static_cast<float>(g.uniform(0, 6e6)),
                                static_cast<float>(g.uniform(-10, 3000))});
            s.scalar.push_back(static_cast<float>(g.uniform(0, 9)));
        }
        lines.push_back(std::move(s));
    }
    const StreamlineTextures tex = encode_streamlines_texture(lines);
    CHECK(tex.x.height == lines.size());
    CHECK(tex.layout.line_count == lines.size());
    REQUIRE(tex.scalar);
    CHECK(decode_streamlines_texture(tex) == lines);
    const auto& pair = std::get<U16Pair>(tex.x.payload);
    const std::size_t row = 0, past = tex.layout.counts[row];
    if (past < tex.layout.max_points)
        CHECK(((static_cast<std::uint32_t>(pair.hi[past]) << 16) | pair.lo[past]) == padding_bits);

    lines[3].scalar.clear();
    const StreamlineTextures no_scalar = encode_streamlines_texture(lines);
    CHECK_FALSE(no_scalar.scalar);
    lines[4].points.resize(1);
    lines[4].scalar.resize(1);
    CHECK_THROWS_AS(encode_streamlines_texture(lines), PreconditionError);
}

TEST_CASE("raw u16 planes are little endian")
{
    const std::vector<std::uint16_t> plane {0x0102, 0xFFFE, 0};
    const auto bytes = encode_raw_u16(plane);
    CHECK(bytes == std::vector<std::uint8_t> {0x02, 0x01, 0xFE, 0xFF, 0, 0});
    CHECK(decode_raw_u16(bytes) == plane);
    CHECK_THROWS_AS(decode_raw_u16(std::vector<std::uint8_t> {1, 2, 3}), ParseError);
}

TEST_CASE("colormap interpolates and rounds half to even")
{
    const Colormap map({{0.0, {0, 0, 0, 255}}, {0.5, {1, 100, 200, 255}}, {1.0, {3, 200, 0, 0}}});
    CHECK(map.lookup(0.0) == std::array<std::uint8_t, 4> {0, 0, 0, 255});
    CHECK(map.lookup(0.25) == std::array<std::uint8_t, 4> {0, 50, 100, 255}); // 0.5 rounds to 0
    CHECK(map.lookup(0.75) == std::array<std::uint8_t, 4> {2, 150, 100, 128}); // 2.0 and 127.5 -> 128
    CHECK(map.lookup(-4) == map.lookup(0));
    CHECK(map.lookup(7) == map.lookup(1));
    CHECK_THROWS_AS(Colormap({{0.0, {}}, {0.0, {}}, {1.0, {}}}), PreconditionError);
    CHECK_THROWS_AS(Colormap({{0.1, {}}, {1.0, {}}}), PreconditionError);
}

TEST_CASE("isoline packing paints nested polygons inner over outer")
{
    VectorLayer layer;
    layer.features = {ring_feature(2, 30, "inner"), ring_feature(8, 10, "outer"), ring_feature(5, 20, "middle")};
    const GridSpec spec {-10, -10, 1, 20, 20};
    const IsolinePack pack = pack_isolines(layer, spec);
    CHECK(pack.min == 10);
    CHECK(pack.max == 30);
    CHECK_FALSE(pack.degenerate);
    auto value_at = [&](double x, double y) {
        const std::size_t c = static_cast<std::size_t>(x + 10), r = static_cast<std::size_t>(y + 10);
        const std::size_t v = spec.height - 1 - r;
        return pack.values.unit_value(c, v);
    };
    CHECK(value_at(0.5, 0.5) == 1.0);
    CHECK(value_at(3.5, 0.5) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(value_at(6.5, 0.5) == 0.0);
    CHECK(pack.mask.unit_value(0, 0) == 0.0);
    CHECK(pack.mask.unit_value(10, 10) > 0.0);

    const RgbaImage img = apply_colormap(pack.values, Colormap({{0.0, {0, 0, 255, 255}}, {1.0, {255, 0, 0, 255}}}), &pack.mask);
    CHECK(img.at(0, 0)[3] == 0);
    CHECK(img.at(10, 10) == std::array<std::uint8_t, 4> {255, 0, 0, 255});

    layer.features[1].value.reset();
    CHECK_THROWS_AS(pack_isolines(layer, spec), PreconditionError);
}

TEST_CASE("blending weights the data by alpha and opacity")
{
    const RgbaImage base {1, 1, {100, 100, 100, 255}};
    const RgbaImage data {1, 1, {200, 0, 50, 255}};
    CHECK(blend_over_base(base, data, 1.0).at(0, 0) == std::array<std::uint8_t, 4> {200, 0, 50, 255});
    CHECK(blend_over_base(base, data, 0.5).at(0, 0) == std::array<std::uint8_t, 4> {150, 50, 75, 255});
    const RgbaImage clear {1, 1, {200, 0, 50, 0}};
    CHECK(blend_over_base(base, clear).at(0, 0) == base.at(0, 0));
}

TEST_CASE("counter RNG is a pure function of seed and counter")
{
    const CounterRng a(7), b(7), c(8);
    for (std::uint64_t k = 0; k < 1000; ++k)
    {
        CHECK(a.bits(k) == b.bits(k));
        const double u = a.uniform(k);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(a.bits(5) != c.bits(5));
    CHECK(a.bits(5) != a.bits(6));
    double mean = 0.0;
    for (std::uint64_t k = 0; k < 100000; ++k)
        mean += a.uniform(k) / 100000.0;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("particles are deterministic, inside the box and above threshold")
{
    testing::Gen g(76);
    Volume3D vol = random_volume(g, 8, 8, 8);
    vol.origin = {100, 200, 5};
    vol.cell_size = {2, 3, 0.5};
    const auto p1 = spawn_particles(vol, 3000, 100.0, 42);
    const auto p2 = spawn_particles(vol, 3000, 100.0, 42);
    REQUIRE(p1.size() == p2.size());
    CHECK(p1.size() < 3000);
    CHECK(p1.size() > 500);
    for (std::size_t i = 0; i < p1.size(); ++i)
    {
        CHECK(p1[i].position == p2[i].position);
        CHECK(p1[i].value >= 100.0);
        CHECK(p1[i].position.x >= 100);
        CHECK(p1[i].position.x < 116);
        CHECK(p1[i].position.y < 224);
        CHECK(p1[i].position.z < 9);
    }
    CHECK(spawn_particles(vol, 3000, 100.0, 43).front().position != p1.front().position);
}
