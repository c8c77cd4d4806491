#include "worldgen/io.hpp"

#include "worldgen/error.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <iterator>
#include <memory>

namespace worldgen::io
{
    std::string read_text(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path)
    {
        const std::string text = read_text(path);
        return {text.begin(), text.end()};
    }

    void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
    {
        if (path.has_parent_path())
        {
            std::error_code ec;
            std::filesystem::create_directories(path.parent_path(), ec);
        }
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw IoError(fmt::format("write to '{}' failed", path.string()));
    }

    void write_text(const std::filesystem::path& path, std::string_view text)
    {
        write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    }

    std::string sha256_hex(std::span<const std::uint8_t> bytes)
    {
        std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
        std::array<unsigned char, EVP_MAX_MD_SIZE> digest {};
        unsigned int length = 0;
        if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
            EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
            EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1)
            throw Error("SHA-256 computation failed");
        std::string hex;
        hex.reserve(2 * length);
        for (unsigned int i = 0; i < length; ++i)
            hex += fmt::format("{:02x}", digest[i]);
        return hex;
    }

    std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_bytes(path)); }

    std::string format_double(double v)
    {
        std::array<char, 64> buf {};
        const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        return {buf.data(), result.ptr};
    }
} // namespace worldgen::io
