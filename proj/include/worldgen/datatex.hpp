#pragma once

#include "worldgen/types.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace worldgen::datatex
{
    struct Normalization
    {
        double min {};
        double max {};
        bool degenerate {false};
    };

    /// Slices of a volume packed as a tiles_x x tiles_y grid of nx x ny tiles. Slice z sits in tile
    /// column z % tiles_x and tile row z / tiles_x (row-major, tile row 0 first in memory).
    struct ZFoldLayout
    {
        std::size_t tiles_x {};
        std::size_t tiles_y {};
        std::size_t nx {};
        std::size_t ny {};
        std::size_t nz {};

        std::size_t width() const noexcept { return tiles_x * nx; }
        std::size_t height() const noexcept { return tiles_y * ny; }

        std::array<std::size_t, 2> texel_of(std::size_t x, std::size_t y, std::size_t z) const noexcept
        {
            return {(z % tiles_x) * nx + x, (z / tiles_x) * ny + y};
        }

        /// nullopt for texels of unused tiles.
        std::optional<std::array<std::size_t, 3>> voxel_of(std::size_t u, std::size_t v) const noexcept
        {
            const std::size_t z = (v / ny) * tiles_x + u / nx;
            if (u >= width() || v >= height() || z >= nz)
                return std::nullopt;
            return std::array {u % nx, v % ny, z};
        }

        friend bool operator==(const ZFoldLayout&, const ZFoldLayout&) = default;
    };

    /// Row i holds line i; texel j of the row is point j. Coordinates live in three planes (x, y, z).
    struct StreamlineLayout
    {
        std::size_t max_points {};
        std::size_t line_count {};
        std::vector<std::size_t> counts;

        friend bool operator==(const StreamlineLayout&, const StreamlineLayout&) = default;
    };

    /// Upper and lower 16 bits of binary32 values, stored as two planes of equal size.
    struct U16Pair
    {
        std::vector<std::uint16_t> hi;
        std::vector<std::uint16_t> lo;
    };

    using Payload = std::variant<std::vector<std::uint8_t>, std::vector<std::uint16_t>, U16Pair>;
    using Layout = std::variant<std::monostate, ZFoldLayout, StreamlineLayout>;

    /// 2D texel array, row 0 first. Payload element count always equals width * height.
    struct DataTexture
    {
        std::size_t width {};
        std::size_t height {};
        Payload payload;
        std::optional<Normalization> normalization;
        Layout layout;

        void check() const;
        /// Texel value scaled to [0,1] (u8 / 255, u16 / 65535, u16-pair as the merged float).
        double unit_value(std::size_t u, std::size_t v) const;
    };

    /// Layout, payload kind and normalization as JSON, written next to every texture.
    nlohmann::json sidecar(const DataTexture& tex);

    // ---- isolines & colormaps -----------------------------------------------------------------------------------

    struct ColorStop
    {
        double position {};
        std::array<std::uint8_t, 4> rgba {};
    };

    /// Piecewise-linear RGBA map; positions strictly increasing from 0 to 1.
    class Colormap
    {
    public:
        explicit Colormap(std::vector<ColorStop> stops);

        /// t is clamped to [0,1]; channels round half to even.
        std::array<std::uint8_t, 4> lookup(double t) const noexcept;
        const std::vector<ColorStop>& stops() const noexcept { return stops_; }

    private:
        std::vector<ColorStop> stops_;
    };

    struct RgbaImage
    {
        std::size_t width {};
        std::size_t height {};
        std::vector<std::uint8_t> pixels; ///< 4 bytes per texel

        std::array<std::uint8_t, 4> at(std::size_t u, std::size_t v) const noexcept
        {
            const std::size_t i = 4 * (v * width + u);
            return {pixels[i], pixels[i + 1], pixels[i + 2], pixels[i + 3]};
        }
    };

    struct IsolinePack
    {
        DataTexture values; ///< u16, normalized, row 0 = north
        DataTexture mask;   ///< u8, 1 where some isoline polygon covers the cell
        double min {};
        double max {};
        bool degenerate {false};
    };

    /// Paints features largest-area-first so nested inner polygons overwrite outer ones, then min-max
    /// normalizes the painted cells to u16. Throws PreconditionError for a feature without a value.
    IsolinePack pack_isolines(const VectorLayer& layer, const GridSpec& spec);

    /// Colors every texel by its unit value; texels whose mask is 0 become fully transparent.
    RgbaImage apply_colormap(const DataTexture& tex, const Colormap& map, const DataTexture* mask = nullptr);

    /// out = (1 - w) * base + w * data per channel, w = data alpha / 255 * opacity.
    RgbaImage blend_over_base(const RgbaImage& base, const RgbaImage& data, double opacity = 1.0);

    // ---- volumes ------------------------------------------------------------------------------------------------

    /// Smallest near-square tile grid holding nz slices (tiles_x = ceil(sqrt(nz))).
    std::array<std::size_t, 2> default_fold(std::size_t nz) noexcept;

    /// Min-max normalized u16 z-fold texture; unused tiles are zero.
    DataTexture zfold_encode(const Volume3D& volume, std::size_t tiles_x, std::size_t tiles_y);

    /// Dequantized volume recovered from a z-fold texture (origin and cell size are not stored).
    Volume3D zfold_decode(const DataTexture& tex);

    struct SamplerStats
    {
        std::size_t samples {};
        std::size_t clamped {};
    };

    /// Bilinear lookups in slices floor(z) and ceil(z) blended by frac(z): trilinear interpolation of the
    /// encoded volume. Coordinates are voxel indices (integers hit voxel centers); out-of-range
    /// coordinates are clamped and counted.
    double zfold_sample(const DataTexture& tex, double x, double y, double z, SamplerStats* stats = nullptr);

    /// Trilinear interpolation of the source volume at voxel-index coordinates, edge clamped.
    double sample_trilinear(const Volume3D& volume, double x, double y, double z) noexcept;

    // ---- 32-bit split ---------------------------------------------------------------------------------------------

    struct SplitF32
    {
        std::uint16_t hi {};
        std::uint16_t lo {};
    };

    SplitF32 split_f32(float v) noexcept;
    float merge_f32(std::uint16_t hi, std::uint16_t lo) noexcept;

    /// Bit pattern stored in texels past a line's last point (quiet NaN).
    inline constexpr std::uint32_t padding_bits = 0x7FC00000u;

    struct StreamlineTextures
    {
        DataTexture x;
        DataTexture y;
        DataTexture z;
        std::optional<DataTexture> scalar; ///< present when every line carries scalars
        StreamlineLayout layout;
    };

    /// One row per line, one texel per point, coordinates split into hi/lo u16 planes.
    StreamlineTextures encode_streamlines_texture(std::span<const Streamline> lines);
    std::vector<Streamline> decode_streamlines_texture(const StreamlineTextures& textures);

    /// Raw little-endian u16 plane.
    std::vector<std::uint8_t> encode_raw_u16(std::span<const std::uint16_t> plane);
    std::vector<std::uint16_t> decode_raw_u16(std::span<const std::uint8_t> bytes);

    // ---- particles ------------------------------------------------------------------------------------------------

    /// Counter-based SplitMix64: draw k is a pure function of (seed, k).
    class CounterRng
    {
    public:
        explicit CounterRng(std::uint64_t seed) noexcept: seed_(seed) {}

        std::uint64_t bits(std::uint64_t counter) const noexcept;
        /// Uniform in [0, 1) with 53 random bits.
        double uniform(std::uint64_t counter) const noexcept;

    private:
        std::uint64_t seed_;
    };

    struct Particle
    {
        Vec3 position;
        double value {};
    };

    /// n candidates uniform in the volume's box, sampled trilinearly; those below threshold are dropped.
    std::vector<Particle> spawn_particles(const Volume3D& volume, std::size_t n, double threshold, std::uint64_t seed);
} // namespace worldgen::datatex
