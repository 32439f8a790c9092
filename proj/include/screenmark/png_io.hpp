#pragma once

#include <cstdio>
#include <csetjmp>
#include <memory>
#include <string>

#include <png.h>

#include "raster.hpp"

namespace screenmark {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

/**
 * Load a PNG as 8-bit gray or RGB. Palette and 16-bit images are expanded,
 * alpha is stripped against black.
 */
inline RasterU8 load_png(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        raise(ErrorCode::IoError, "cannot open '" + path + "' for reading");

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        raise(ErrorCode::IoError, "'" + path + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        raise(ErrorCode::IoError, "libpng allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        raise(ErrorCode::IoError, "libpng allocation failed");
    }

    RasterU8 out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::IoError, "failed to decode '" + path + "'");
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int updated_type = png_get_color_type(png, info);
    const int channels = (updated_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    out = RasterU8(static_cast<int>(width), static_cast<int>(height), channels);

    rows.resize(height);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = out.data.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

/// Write an 8-bit gray or RGB PNG.
inline void save_png(const std::string& path, const RasterU8& img) {
    if (img.width <= 0 || img.height <= 0)
        raise(ErrorCode::ShapeMismatch, "cannot save an empty image");

    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        raise(ErrorCode::IoError, "cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        raise(ErrorCode::IoError, "libpng allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        raise(ErrorCode::IoError, "libpng allocation failed");
    }

    std::vector<png_bytep> rows(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        raise(ErrorCode::IoError, "failed to encode '" + path + "'");
    }

    png_init_io(png, fp.get());
    const int color_type = (img.channels == 1) ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width, img.height, 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * stride);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace screenmark
