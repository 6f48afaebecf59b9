// SPDX-License-Identifier: Apache-2.0
#include "gspoison/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "gspoison/error.hpp"

namespace gspoison {

Image8::Image8(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {}

ImageF::ImageF(int w, int h, double fill) : width(w), height(h), data(std::size_t(w) * h * 3, fill) {}

MapF::MapF(int w, int h, double fill) : width(w), height(h), data(std::size_t(w) * h, fill) {}

Mask::Mask(int w, int h, bool fill) : width(w), height(h), data(std::size_t(w) * h, fill ? 1 : 0) {}

std::size_t Mask::count() const { return static_cast<std::size_t>(std::count(data.begin(), data.end(), 1)); }

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

Image8 read_png(const std::filesystem::path& path, bool force_alpha) {
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw IoError("cannot open PNG '" + path.string() + "'");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw FormatError("'" + path.string() + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialisation failed");
    }
    Image8 img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("corrupt PNG '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    const bool has_trns = png_get_valid(png, info, PNG_INFO_tRNS);
    if (has_trns) png_set_tRNS_to_alpha(png);
    const bool has_alpha = has_trns || (color_type & PNG_COLOR_MASK_ALPHA);
    if (!has_alpha && force_alpha) png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = static_cast<int>(png_get_rowbytes(png, info) / img.width);
    img.data.resize(std::size_t(img.width) * img.height * img.channels);
    rows.resize(img.height);
    for (int v = 0; v < img.height; ++v) rows[v] = img.data.data() + std::size_t(v) * img.width * img.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    if (img.channels != 3 && img.channels != 4) throw FormatError("unsupported PNG layout in '" + path.string() + "'");
    return img;
}

void write_png(const Image8& image, const std::filesystem::path& path) {
    if (image.channels != 3 && image.channels != 4) throw ContractError("write_png: need 3 or 4 channels");
    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw IoError("cannot write PNG '" + path.string() + "'");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    std::vector<png_bytep> rows(image.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing PNG '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 image.channels == 4 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int v = 0; v < image.height; ++v)
        rows[v] = const_cast<png_bytep>(image.data.data() + std::size_t(v) * image.width * image.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageF to_float(const Image8& image) {
    ImageF out(image.width, image.height);
    for (int v = 0; v < image.height; ++v)
        for (int u = 0; u < image.width; ++u)
            for (int c = 0; c < 3; ++c) out.at(u, v, c) = image.at(u, v, c) / 255.0;
    return out;
}

Image8 to_8bit(const ImageF& image) {
    Image8 out(image.width, image.height, 3);
    for (std::size_t i = 0; i < image.data.size(); ++i)
        out.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.data[i], 0.0, 1.0) * 255.0));
    return out;
}

void write_depth_raw(const MapF& depth, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write depth file '" + path.string() + "'");
    const std::uint32_t header[3] = {static_cast<std::uint32_t>(depth.width), static_cast<std::uint32_t>(depth.height),
                                     kDepthMagic};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    std::vector<float> values(depth.data.begin(), depth.data.end());
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!out) throw IoError("failed writing depth file '" + path.string() + "'");
}

MapF read_depth_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open depth file '" + path.string() + "'");
    std::uint32_t header[3];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || header[2] != kDepthMagic) throw FormatError("'" + path.string() + "' is not a depth file");
    MapF depth(static_cast<int>(header[0]), static_cast<int>(header[1]));
    std::vector<float> values(depth.data.size());
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!in) throw FormatError("depth file '" + path.string() + "' is truncated");
    std::copy(values.begin(), values.end(), depth.data.begin());
    return depth;
}

void write_depth_pfm(const MapF& depth, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write depth file '" + path.string() + "'");
    out << "Pf\n" << depth.width << " " << depth.height << "\n-1.0\n";
    for (int v = depth.height - 1; v >= 0; --v) {
        for (int u = 0; u < depth.width; ++u) {
            const float f = static_cast<float>(depth.at(u, v));
            out.write(reinterpret_cast<const char*>(&f), sizeof(float));
        }
    }
    if (!out) throw IoError("failed writing depth file '" + path.string() + "'");
}

} // namespace gspoison
