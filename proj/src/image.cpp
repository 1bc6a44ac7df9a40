#include "splatgeom/image.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <memory>

#include <png.h>

namespace splatgeom {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

void open_reader(PngReader& r, std::FILE* f, const std::string& path) {
    uint8_t sig[8];
    if (std::fread(sig, 1, 8, f) != 8 || png_sig_cmp(sig, 0, 8))
        raise(Errc::UnreadableImage, path + " is not a PNG file");
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) raise(Errc::UnreadableImage, "libpng init failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) raise(Errc::UnreadableImage, "libpng info init failed");
    if (setjmp(png_jmpbuf(r.png)))
        raise(Errc::UnreadableImage, "libpng failed decoding " + path);
    png_init_io(r.png, f);
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);
}

}  // namespace

LabelImage load_label_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) raise(Errc::UnreadableImage, "cannot open " + path);
    PngReader r;
    open_reader(r, f.get(), path);
    if (setjmp(png_jmpbuf(r.png)))
        raise(Errc::UnreadableImage, "libpng failed decoding " + path);

    png_uint_32 w = png_get_image_width(r.png, r.info);
    png_uint_32 h = png_get_image_height(r.png, r.info);
    int depth = png_get_bit_depth(r.png, r.info);
    int color = png_get_color_type(r.png, r.info);

    if (color != PNG_COLOR_TYPE_GRAY)
        raise(Errc::UnreadableImage, path + ": mask must be single-channel grayscale");
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
    png_read_update_info(r.png, r.info);
    depth = png_get_bit_depth(r.png, r.info);

    LabelImage img;
    img.width = int(w);
    img.height = int(h);
    img.bit_depth = depth;
    img.data.resize(size_t(w) * size_t(h));

    size_t rowbytes = png_get_rowbytes(r.png, r.info);
    std::vector<uint8_t> row(rowbytes);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(r.png, row.data(), nullptr);
        if (depth == 16) {
            for (png_uint_32 x = 0; x < w; ++x)
                img.data[size_t(y) * w + x] =
                    uint16_t(uint16_t(row[2 * x]) << 8 | row[2 * x + 1]);  // PNG is big-endian
        } else {
            for (png_uint_32 x = 0; x < w; ++x)
                img.data[size_t(y) * w + x] = row[x];
        }
    }
    png_read_end(r.png, nullptr);
    return img;
}

ImageF load_gray_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) raise(Errc::UnreadableImage, "cannot open " + path);
    PngReader r;
    open_reader(r, f.get(), path);
    if (setjmp(png_jmpbuf(r.png)))
        raise(Errc::UnreadableImage, "libpng failed decoding " + path);

    png_uint_32 w = png_get_image_width(r.png, r.info);
    png_uint_32 h = png_get_image_height(r.png, r.info);
    int color = png_get_color_type(r.png, r.info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_strip_alpha(r.png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray_fixed(r.png, 1, -1, -1);
    if (png_get_bit_depth(r.png, r.info) < 8) png_set_expand_gray_1_2_4_to_8(r.png);
    png_read_update_info(r.png, r.info);
    int depth = png_get_bit_depth(r.png, r.info);
    double scale = depth == 16 ? 65535.0 : 255.0;

    ImageF img{int(w), int(h)};
    size_t rowbytes = png_get_rowbytes(r.png, r.info);
    std::vector<uint8_t> row(rowbytes);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(r.png, row.data(), nullptr);
        if (depth == 16) {
            for (png_uint_32 x = 0; x < w; ++x)
                img.at(int(x), int(y)) =
                    double(uint16_t(row[2 * x]) << 8 | row[2 * x + 1]) / scale;
        } else {
            for (png_uint_32 x = 0; x < w; ++x)
                img.at(int(x), int(y)) = double(row[x]) / scale;
        }
    }
    png_read_end(r.png, nullptr);
    return img;
}

void save_label_png(const std::string& path, const LabelImage& img) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) raise(Errc::IoFailure, "cannot open " + path + " for writing");
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) raise(Errc::IoFailure, "libpng init failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) raise(Errc::IoFailure, "libpng info init failed");
    if (setjmp(png_jmpbuf(w.png)))
        raise(Errc::IoFailure, "libpng failed encoding " + path);

    png_init_io(w.png, f.get());
    int depth = img.bit_depth == 16 ? 16 : 8;
    png_set_IHDR(w.png, w.info, png_uint_32(img.width), png_uint_32(img.height), depth,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    std::vector<uint8_t> row(size_t(img.width) * (depth == 16 ? 2 : 1));
    for (int y = 0; y < img.height; ++y) {
        if (depth == 16) {
            for (int x = 0; x < img.width; ++x) {
                uint16_t v = img.at(x, y);
                row[size_t(2 * x)] = uint8_t(v >> 8);
                row[size_t(2 * x) + 1] = uint8_t(v & 0xff);
            }
        } else {
            for (int x = 0; x < img.width; ++x)
                row[size_t(x)] = uint8_t(std::min<uint16_t>(img.at(x, y), 255));
        }
        png_write_row(w.png, row.data());
    }
    png_write_end(w.png, nullptr);
}

void save_gray_png(const std::string& path, const ImageF& img) {
    LabelImage tmp;
    tmp.width = img.width;
    tmp.height = img.height;
    tmp.bit_depth = 8;
    tmp.data.resize(img.size());
    for (size_t i = 0; i < img.size(); ++i) {
        double v = std::clamp(img.data[i], 0.0, 1.0);
        tmp.data[i] = uint16_t(std::lround(v * 255.0));
    }
    save_label_png(path, tmp);
}

}  // namespace splatgeom
