// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/image.hpp"

#include "gscodec/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace gscodec {

void write_png(const Image& image, const std::filesystem::path& path) {
    std::vector<png_byte> pixels(image.data.size());
    for (std::size_t i = 0; i < pixels.size(); ++i)
        pixels[i] = static_cast<png_byte>(std::lround(std::clamp(image.data[i], 0.0, 1.0) * 255.0));
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, pixels.data(), 0, nullptr)) {
        const std::string message = png.message;
        png_image_free(&png);
        throw Error("cannot write " + path.string() + ": " + message);
    }
}

Image read_png(const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw Error("cannot read " + path.string() + ": " + png.message);
    png.format = PNG_FORMAT_RGB;
    std::vector<png_byte> pixels(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
        const std::string message = png.message;
        png_image_free(&png);
        throw Error("cannot read " + path.string() + ": " + message);
    }
    Image image(static_cast<int>(png.width), static_cast<int>(png.height));
    for (std::size_t i = 0; i < pixels.size(); ++i) image.data[i] = pixels[i] / 255.0;
    return image;
}

}  // namespace gscodec
