#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace worldgen::png
{
    /// Grayscale image, row 0 at the top. 8-bit images keep samples in 0..255.
    struct GrayImage
    {
        std::size_t width {};
        std::size_t height {};
        int bit_depth {8};
        std::vector<std::uint16_t> pixels;
    };

    /// Non-interlaced grayscale PNG without alpha, bit depth 8 or 16.
    std::vector<std::uint8_t> encode_gray(const GrayImage& image);
    GrayImage decode_gray(std::span<const std::uint8_t> bytes);

    /// Non-interlaced 8-bit RGBA PNG; `rgba` holds 4 bytes per pixel, row 0 at the top.
    std::vector<std::uint8_t> encode_rgba(std::size_t width, std::size_t height, std::span<const std::uint8_t> rgba);
} // namespace worldgen::png
