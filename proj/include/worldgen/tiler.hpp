#pragma once

#include "worldgen/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace worldgen::tiler
{
    /// Engine-recommended landscape resolutions.
    inline constexpr std::size_t recommended_tile_sizes[] = {127, 253, 505, 1009, 2017, 4033};
    inline constexpr std::size_t default_tile_size = 1009;

    bool is_recommended_tile_size(std::size_t size) noexcept;

    /// "{basename}_x{col}_y{row}", row 0 = northernmost tile, no zero padding.
    struct NamingScheme
    {
        std::string basename;

        std::string name(std::size_t col, std::size_t row) const;
        /// Exact inverse of name(); nullopt for anything name() cannot produce.
        std::optional<std::pair<std::size_t, std::size_t>> parse(std::string_view name) const;
    };

    /// Ordered by (row, col) so iteration matches the manifest order.
    struct TileIndex
    {
        std::size_t col {};
        std::size_t row {};

        friend auto operator<=>(const TileIndex& a, const TileIndex& b) noexcept
        {
            if (auto c = a.row <=> b.row; c != 0)
                return c;
            return a.col <=> b.col;
        }
        friend bool operator==(const TileIndex&, const TileIndex&) = default;
    };

    enum class PaddingMode
    {
        edge, ///< replicate the nearest source cell (heightmaps)
        zero, ///< fill with 0 (masks)
    };

    struct TileSet
    {
        std::map<TileIndex, RasterGrid> tiles;
        std::size_t tile_size {};
        NamingScheme naming;
        std::size_t valid_width {};  ///< source width before padding
        std::size_t valid_height {}; ///< source height before padding
        GridSpec source;             ///< geometry of the tiled source grid
        double nodata {default_nodata};
        std::vector<std::string> warnings;

        std::size_t tiles_x() const noexcept { return (valid_width + tile_size - 1) / tile_size; }
        std::size_t tiles_y() const noexcept { return (valid_height + tile_size - 1) / tile_size; }
    };

    TileSet retile(const RasterGrid& grid, std::size_t tile_size, const NamingScheme& naming,
                   PaddingMode padding = PaddingMode::edge);

    /// Inverse of retile, cropped to the valid region. Throws when a tile of the dense rectangle is missing.
    RasterGrid reassemble(const TileSet& tiles);

    struct Height16
    {
        double z_min {};
        double z_max {};
    };
    struct Mask8
    {
    };
    /// Height16 maps [z_min, z_max] linearly onto 0..65535; Mask8 maps [0, 1] onto 0..255.
    using QuantSpec = std::variant<Height16, Mask8>;

    /// Round-half-to-even quantization with clamping; `clamped` is set when the value lay outside the domain.
    std::uint16_t quantize(double value, const QuantSpec& q, bool& clamped) noexcept;
    double dequantize(std::uint16_t code, const QuantSpec& q) noexcept;
    /// Value width of one quantization code.
    double quantization_step(const QuantSpec& q) noexcept;

    struct TileFile
    {
        std::string path; ///< relative to the output directory
        std::size_t col {};
        std::size_t row {};
        std::size_t clamped {};
        std::size_t nodata {};
    };

    /// What write_tiles records about a tile set; serialized into the manifest.
    struct TileSetRecord
    {
        std::string basename;
        QuantSpec quantization;
        std::size_t tile_size {};
        std::size_t tiles_x {};
        std::size_t tiles_y {};
        std::size_t valid_width {};
        std::size_t valid_height {};
        GridSpec source;
        double nodata {default_nodata};
        std::vector<TileFile> files; ///< ordered by (row, col)

        int bit_depth() const noexcept { return std::holds_alternative<Height16>(quantization) ? 16 : 8; }
        /// Engine import scale factors in centimeters: x = y = spacing * 100, z = (z_max - z_min) * 100 / 512.
        double scale_xy() const noexcept { return source.cell_spacing * 100.0; }
        double scale_z() const noexcept;
    };

    nlohmann::json to_json(const TileSetRecord& record);
    TileSetRecord tile_set_record_from_json(const nlohmann::json& j);

    /// Writes one grayscale PNG per tile into out_dir/<basename>/, returning the manifest record.
    TileSetRecord write_tiles(const TileSet& tiles, const QuantSpec& quantization, const std::filesystem::path& out_dir);

    /// Reads and dequantizes the tiles of a record. Throws when a tile file is missing or malformed.
    TileSet read_tiles(const TileSetRecord& record, const std::filesystem::path& out_dir);
} // namespace worldgen::tiler
