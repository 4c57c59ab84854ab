#include "easynet/raster_io.hpp"

#include "easynet/error.hpp"
#include "easynet/kernels.hpp"

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace easynet {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct TiffCloser {
    void operator()(TIFF* t) const { TIFFClose(t); }
};
using TiffPtr = std::unique_ptr<TIFF, TiffCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

void silent_tiff_handler(const char*, const char*, va_list) {}

} // namespace

Tensor read_png(const std::filesystem::path& path) {
    FilePtr file = open_file(path, "rb");
    png_byte header[8];
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw DecodeError("not a PNG file: " + path.string());
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("libpng initialization failed");
    }
    std::vector<png_bytep> rows;
    std::vector<png_byte> buffer;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("corrupt PNG data in " + path.string());
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    buffer.resize(stride * height);
    rows.resize(height);
    for (int y = 0; y < height; ++y) rows[y] = buffer.data() + stride * y;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    const int out_c = channels >= 3 ? 3 : 1;
    Tensor image({1, out_c, height, width});
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < out_c; ++c) {
                image.at(0, c, y, x) = static_cast<real>(rows[y][x * channels + c]) / real(255);
            }
    return image;
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
    if (image.n() != 1 || (image.c() != 1 && image.c() != 3)) {
        throw InvalidArgument("write_png: expected a (1,1|3,H,W) tensor, got " + image.shape().str());
    }
    FilePtr file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    const int h = image.h();
    const int w = image.w();
    const int c = image.c();
    std::vector<png_byte> buffer(static_cast<std::size_t>(h) * w * c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < c; ++k) {
                const double v = std::clamp(static_cast<double>(image.at(0, k, y, x)), 0.0, 1.0);
                buffer[(static_cast<std::size_t>(y) * w + x) * c + k] =
                    static_cast<png_byte>(std::lround(v * 255.0));
            }
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * w * c;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, w, h, 8, c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor read_xyz_tiff(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("missing point map " + path.string());
    TIFFSetWarningHandler(silent_tiff_handler);
    TiffPtr tif(TIFFOpen(path.c_str(), "r"));
    if (!tif) throw DecodeError("cannot decode TIFF " + path.string());
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint16_t spp = 0;
    std::uint16_t bps = 0;
    std::uint16_t format = SAMPLEFORMAT_UINT;
    std::uint16_t config = PLANARCONFIG_CONTIG;
    TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width);
    TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &format);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &config);
    if (spp != 3 || bps != 32 || format != SAMPLEFORMAT_IEEEFP || config != PLANARCONFIG_CONTIG) {
        throw DecodeError("expected a 3-channel float32 point map in " + path.string());
    }
    Tensor xyz({1, 3, static_cast<int>(height), static_cast<int>(width)});
    std::vector<float> row(static_cast<std::size_t>(width) * 3);
    for (std::uint32_t y = 0; y < height; ++y) {
        if (TIFFReadScanline(tif.get(), row.data(), y, 0) < 0) {
            throw DecodeError("truncated TIFF scanline " + std::to_string(y) + " in " + path.string());
        }
        for (std::uint32_t x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) xyz.at(0, c, static_cast<int>(y), static_cast<int>(x)) = row[x * 3 + c];
    }
    return xyz;
}

void write_xyz_tiff(const std::filesystem::path& path, const Tensor& xyz) {
    if (xyz.n() != 1 || xyz.c() != 3) throw InvalidArgument("write_xyz_tiff: expected (1,3,H,W)");
    TiffPtr tif(TIFFOpen(path.c_str(), "w"));
    if (!tif) throw IoError("cannot create " + path.string());
    const auto width = static_cast<std::uint32_t>(xyz.w());
    const auto height = static_cast<std::uint32_t>(xyz.h());
    TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, width);
    TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, height);
    TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, 3);
    TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, 32);
    TIFFSetField(tif.get(), TIFFTAG_SAMPLEFORMAT, SAMPLEFORMAT_IEEEFP);
    TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
    TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_RGB);
    TIFFSetField(tif.get(), TIFFTAG_COMPRESSION, COMPRESSION_NONE);
    TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, height);
    std::vector<float> row(static_cast<std::size_t>(width) * 3);
    for (std::uint32_t y = 0; y < height; ++y) {
        for (std::uint32_t x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) row[x * 3 + c] = static_cast<float>(xyz.at(0, c, static_cast<int>(y), static_cast<int>(x)));
        if (TIFFWriteScanline(tif.get(), row.data(), y, 0) < 0) throw IoError("failed writing " + path.string());
    }
}

Tensor resize_bilinear(const Tensor& image, int height, int width) {
    if (image.h() == height && image.w() == width) return image;
    Tensor out;
    kernels::upsample_bilinear_forward(image, height, width, out);
    return out;
}

Tensor resize_nearest(const Tensor& image, int height, int width) {
    if (image.h() == height && image.w() == width) return image;
    Tensor out({image.n(), image.c(), height, width});
    for (int n = 0; n < image.n(); ++n)
        for (int c = 0; c < image.c(); ++c)
            for (int y = 0; y < height; ++y) {
                const int sy = std::min(image.h() - 1, static_cast<int>((y + 0.5) * image.h() / height));
                for (int x = 0; x < width; ++x) {
                    const int sx = std::min(image.w() - 1, static_cast<int>((x + 0.5) * image.w() / width));
                    out.at(n, c, y, x) = image.at(n, c, sy, sx);
                }
            }
    return out;
}

} // namespace easynet
