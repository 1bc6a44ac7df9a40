#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatgeom/core.hpp"

namespace splatgeom {

// Grayscale image, values in [0,1] for photographic content.
struct ImageF {
    int width = 0, height = 0;
    std::vector<double> data;

    ImageF() = default;
    ImageF(int w, int h, double fill = 0.0)
        : width(w), height(h), data(size_t(w) * size_t(h), fill) {}

    double& at(int x, int y) { return data[size_t(y) * size_t(width) + size_t(x)]; }
    double at(int x, int y) const { return data[size_t(y) * size_t(width) + size_t(x)]; }
    size_t size() const { return data.size(); }
};

// Interleaved RGB image, values in [0,1].
struct ImageRGB {
    int width = 0, height = 0;
    std::vector<double> data;  // 3 * (y*width + x) + channel

    ImageRGB() = default;
    ImageRGB(int w, int h, double fill = 0.0)
        : width(w), height(h), data(size_t(w) * size_t(h) * 3, fill) {}

    double& at(int x, int y, int c) {
        return data[3 * (size_t(y) * size_t(width) + size_t(x)) + size_t(c)];
    }
    double at(int x, int y, int c) const {
        return data[3 * (size_t(y) * size_t(width) + size_t(x)) + size_t(c)];
    }
};

// Integer label image as decoded from a mask PNG.
struct LabelImage {
    int width = 0, height = 0;
    int bit_depth = 8;  // 8 or 16
    std::vector<uint16_t> data;

    uint16_t at(int x, int y) const { return data[size_t(y) * size_t(width) + size_t(x)]; }
};

// Strict single-channel (gray, 8/16-bit, no alpha) PNG decode.
LabelImage load_label_png(const std::string& path);

// Lenient decode: gray/RGB/palette accepted, converted to grayscale in [0,1].
ImageF load_gray_png(const std::string& path);

// Writes an 8-bit (values <= 255) or 16-bit grayscale PNG.
void save_label_png(const std::string& path, const LabelImage& img);

// Writes grayscale values in [0,1] as an 8-bit PNG.
void save_gray_png(const std::string& path, const ImageF& img);

}  // namespace splatgeom
