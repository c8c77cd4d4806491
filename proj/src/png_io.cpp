#include "worldgen/png_io.hpp"

#include "worldgen/error.hpp"

#include <fmt/format.h>
#include <png.h>

#include <cstring>
#include <string>

namespace worldgen::png
{
    namespace
    {
        [[noreturn]] void on_error(png_structp, png_const_charp message) { throw Error(fmt::format("libpng: {}", message)); }
        void on_warning(png_structp, png_const_charp) {}

        void append(png_structp ptr, png_bytep data, png_size_t length)
        {
            auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(ptr));
            out->insert(out->end(), data, data + length);
        }
        void flush(png_structp) {}

        struct Reader
        {
            std::span<const std::uint8_t> bytes;
            std::size_t offset {};
        };

        void consume(png_structp ptr, png_bytep data, png_size_t length)
        {
            auto* r = static_cast<Reader*>(png_get_io_ptr(ptr));
            if (r->offset + length > r->bytes.size())
                png_error(ptr, "unexpected end of data");
            std::memcpy(data, r->bytes.data() + r->offset, length);
            r->offset += length;
        }

        /// Owns a write struct for the duration of an encode.
        class Writer
        {
        public:
            Writer()
            {
                png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
                info_ = png_ ? png_create_info_struct(png_) : nullptr;
                if (!png_ || !info_)
                    throw Error("libpng: cannot allocate write structures");
                png_set_write_fn(png_, &out_, append, flush);
            }
            ~Writer() { png_destroy_write_struct(&png_, &info_); }
            Writer(const Writer&) = delete;
            Writer& operator=(const Writer&) = delete;

            std::vector<std::uint8_t> write(std::size_t width, std::size_t height, int depth, int color,
                                            const std::vector<std::vector<png_byte>>& rows)
            {
                png_set_IHDR(png_, info_, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth, color,
                             PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
                png_set_compression_level(png_, 6);
                png_write_info(png_, info_);
                for (const auto& row: rows)
                    png_write_row(png_, row.data());
                png_write_end(png_, nullptr);
                return std::move(out_);
            }

        private:
            png_structp png_ {};
            png_infop info_ {};
            std::vector<std::uint8_t> out_;
        };
    } // namespace

    std::vector<std::uint8_t> encode_gray(const GrayImage& image)
    {
        if (image.bit_depth != 8 && image.bit_depth != 16)
            throw PreconditionError(fmt::format("unsupported PNG bit depth {}", image.bit_depth));
        if (image.width == 0 || image.height == 0 || image.pixels.size() != image.width * image.height)
            throw PreconditionError("PNG image dimensions do not match pixel count");
        const std::size_t bpp = image.bit_depth / 8;
        std::vector<std::vector<png_byte>> rows(image.height, std::vector<png_byte>(image.width * bpp));
        for (std::size_t r = 0; r < image.height; ++r)
            for (std::size_t c = 0; c < image.width; ++c)
            {
                const std::uint16_t v = image.pixels[r * image.width + c];
                if (bpp == 1)
                    rows[r][c] = static_cast<png_byte>(v);
                else
                {
                    // PNG stores 16-bit samples big-endian.
                    rows[r][2 * c] = static_cast<png_byte>(v >> 8);
                    rows[r][2 * c + 1] = static_cast<png_byte>(v & 0xFF);
                }
            }
        Writer writer;
        return writer.write(image.width, image.height, image.bit_depth, PNG_COLOR_TYPE_GRAY, rows);
    }

    std::vector<std::uint8_t> encode_rgba(std::size_t width, std::size_t height, std::span<const std::uint8_t> rgba)
    {
        if (width == 0 || height == 0 || rgba.size() != width * height * 4)
            throw PreconditionError("RGBA image dimensions do not match pixel count");
        std::vector<std::vector<png_byte>> rows(height);
        for (std::size_t r = 0; r < height; ++r)
            rows[r].assign(rgba.begin() + static_cast<std::ptrdiff_t>(r * width * 4),
                           rgba.begin() + static_cast<std::ptrdiff_t>((r + 1) * width * 4));
        Writer writer;
        return writer.write(width, height, 8, PNG_COLOR_TYPE_RGBA, rows);
    }

    GrayImage decode_gray(std::span<const std::uint8_t> bytes)
    {
        if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
            throw FormatError("not a PNG file");
        png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
        png_infop info = png ? png_create_info_struct(png) : nullptr;
        if (!png || !info)
        {
            png_destroy_read_struct(&png, &info, nullptr);
            throw Error("libpng: cannot allocate read structures");
        }
        struct Guard
        {
            png_structp& p;
            png_infop& i;
            ~Guard() { png_destroy_read_struct(&p, &i, nullptr); }
        } guard {png, info};

        Reader reader {bytes, 0};
        png_set_read_fn(png, &reader, consume);
        png_read_info(png, info);
        const auto width = png_get_image_width(png, info);
        const auto height = png_get_image_height(png, info);
        const int depth = png_get_bit_depth(png, info);
        const int color = png_get_color_type(png, info);
        if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16))
            throw FormatError(fmt::format("expected 8/16-bit grayscale PNG, got color type {} depth {}", color, depth));
        if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE)
            throw FormatError("interlaced PNG is not supported");

        GrayImage image {width, height, depth, std::vector<std::uint16_t>(static_cast<std::size_t>(width) * height)};
        const std::size_t bpp = static_cast<std::size_t>(depth) / 8;
        std::vector<png_byte> row(width * bpp);
        for (std::size_t r = 0; r < height; ++r)
        {
            png_read_row(png, row.data(), nullptr);
            for (std::size_t c = 0; c < width; ++c)
                image.pixels[r * width + c] =
                    bpp == 1 ? row[c] : static_cast<std::uint16_t>((row[2 * c] << 8) | row[2 * c + 1]);
        }
        png_read_end(png, nullptr);
        return image;
    }
} // namespace worldgen::png
