// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gspoison {

/// Interleaved 8-bit image, 3 (RGB) or 4 (RGBA) channels.
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    Image8() = default;
    Image8(int w, int h, int c, std::uint8_t fill = 0);

    std::uint8_t& at(int u, int v, int c) { return data[(std::size_t(v) * width + u) * channels + c]; }
    std::uint8_t at(int u, int v, int c) const { return data[(std::size_t(v) * width + u) * channels + c]; }
    bool operator==(const Image8&) const = default;
};

/// Interleaved RGB float image, nominally in [0,1].
struct ImageF {
    int width = 0;
    int height = 0;
    std::vector<double> data; // size width * height * 3

    ImageF() = default;
    ImageF(int w, int h, double fill = 0.0);

    double& at(int u, int v, int c) { return data[(std::size_t(v) * width + u) * 3 + c]; }
    double at(int u, int v, int c) const { return data[(std::size_t(v) * width + u) * 3 + c]; }
};

/// Single-channel float map (depth, alpha, mask weights).
struct MapF {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    MapF() = default;
    MapF(int w, int h, double fill = 0.0);

    double& at(int u, int v) { return data[std::size_t(v) * width + u]; }
    double at(int u, int v) const { return data[std::size_t(v) * width + u]; }
};

/// Binary per-pixel mask.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int w, int h, bool fill = false);

    bool at(int u, int v) const { return data[std::size_t(v) * width + u] != 0; }
    void set(int u, int v, bool on) { data[std::size_t(v) * width + u] = on ? 1 : 0; }
    std::size_t count() const;
};

/// Reads any PNG, converting to 8-bit RGB or RGBA (alpha kept when present
/// or when `force_alpha` is set).
Image8 read_png(const std::filesystem::path& path, bool force_alpha = false);
void write_png(const Image8& image, const std::filesystem::path& path);

ImageF to_float(const Image8& image);
/// Rounds to nearest after clamping to [0,1].
Image8 to_8bit(const ImageF& image);

inline constexpr std::uint32_t kDepthMagic = 0x48545044u; // "DPTH" little-endian

/// Raw depth: width u32, height u32, magic u32, then float32 row-major.
void write_depth_raw(const MapF& depth, const std::filesystem::path& path);
MapF read_depth_raw(const std::filesystem::path& path);
/// Portable float map (single channel "Pf", little-endian, bottom row first).
void write_depth_pfm(const MapF& depth, const std::filesystem::path& path);

} // namespace gspoison
