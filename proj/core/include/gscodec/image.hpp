// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace gscodec {

/// Row-major H x W x 3 image of doubles.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    double* pixel(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const double* pixel(int x, int y) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height;
    }
};

/// 8-bit RGB PNG. Values are clamped to [0,1] and rounded; no transfer curve.
void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

}  // namespace gscodec
