#include "ham/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>

namespace fs = std::filesystem;

namespace ham {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

Image load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png: out of memory");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Image img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_png(const std::string& path, const Image& img) {
    if (img.width == 0 || img.height == 0 ||
        img.pixels.size() != img.width * img.height * 3)
        throw ArgumentError("png: malformed image buffer");

    const std::string tmp = path + ".tmp";
    {
        FilePtr fp(std::fopen(tmp.c_str(), "wb"));
        if (!fp) throw IoError("png: cannot open " + tmp);
        png_structp png =
            png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!png) throw IoError("png: out of memory");
        png_infop info = png_create_info_struct(png);
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            throw IoError("png: out of memory");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw IoError("png: failed to encode " + path);
        }
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                     static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        std::vector<png_bytep> rows(img.height);
        for (std::size_t y = 0; y < img.height; ++y)
            rows[y] = const_cast<png_bytep>(img.pixels.data() + y * img.width * 3);
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }
    fs::rename(tmp, path);
}

Image resize_bilinear(const Image& src, std::size_t width, std::size_t height) {
    if (width == 0 || height == 0)
        throw ArgumentError("resize: target dimensions must be positive");
    Image dst;
    dst.width = width;
    dst.height = height;
    dst.pixels.resize(width * height * 3);
    const double sx = static_cast<double>(src.width) / width;
    const double sy = static_cast<double>(src.height) / height;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const double fy = (y + 0.5) * sy - 0.5;
            const long x0 = static_cast<long>(std::floor(fx));
            const long y0 = static_cast<long>(std::floor(fy));
            const double ax = fx - x0, ay = fy - y0;
            auto clampx = [&](long v) {
                return static_cast<std::size_t>(
                    std::min<long>(std::max<long>(v, 0), static_cast<long>(src.width) - 1));
            };
            auto clampy = [&](long v) {
                return static_cast<std::size_t>(
                    std::min<long>(std::max<long>(v, 0), static_cast<long>(src.height) - 1));
            };
            const std::size_t x1 = clampx(x0), x2 = clampx(x0 + 1);
            const std::size_t y1 = clampy(y0), y2 = clampy(y0 + 1);
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = (1 - ax) * src.at(x1, y1, c) + ax * src.at(x2, y1, c);
                const double bot = (1 - ax) * src.at(x1, y2, c) + ax * src.at(x2, y2, c);
                const double v = (1 - ay) * top + ay * bot;
                dst.at(x, y, c) = static_cast<std::uint8_t>(std::lround(
                    std::min(255.0, std::max(0.0, v))));
            }
        }
    return dst;
}

Tensor image_to_latent(const Image& img, std::size_t size) {
    if (img.width == 0 || img.height == 0)
        throw ArgumentError("image_to_latent: empty image");
    const Image small = (img.width == size && img.height == size)
                            ? img
                            : resize_bilinear(img, size, size);
    Tensor latent({3, size, size});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x)
                latent.data[c * size * size + y * size + x] =
                    static_cast<float>(small.at(x, y, c)) / 127.5f - 1.0f;
    return latent;
}

Image latent_to_image(const Tensor& latent) {
    if (latent.rank() != 3 || latent.shape[0] != 3 || latent.shape[1] != latent.shape[2])
        throw ShapeError("latent_to_image: expected (3, S, S), got " +
                         shape_str(latent.shape));
    require_finite(latent, "latent passed to the image encoder");
    const std::size_t size = latent.shape[1];
    Image img;
    img.width = img.height = size;
    img.pixels.resize(size * size * 3);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                float v = latent.data[c * size * size + y * size + x];
                v = std::min(1.0f, std::max(-1.0f, v));
                img.at(x, y, c) = static_cast<std::uint8_t>(
                    std::lround((v + 1.0f) * 127.5f));
            }
    return img;
}

} // namespace ham
