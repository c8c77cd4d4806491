#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace worldgen::io
{
    std::string read_text(const std::filesystem::path& path);
    std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
    void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
    void write_text(const std::filesystem::path& path, std::string_view text);

    /// Lowercase hex SHA-256.
    std::string sha256_hex(std::span<const std::uint8_t> bytes);
    std::string sha256_file(const std::filesystem::path& path);

    /// Shortest decimal text that parses back to the same double.
    std::string format_double(double v);
} // namespace worldgen::io
