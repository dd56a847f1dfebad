#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace docres {

// Row-major raster, unit-interval floats. On disk everything is 8-bit;
// byte v loads as v/255 and float v stores as round(clamp(v,0,1)*255).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<float> data;  // (i*width + j)*channels + c

    Image() = default;
    Image(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          data(size_t(h) * size_t(w) * size_t(c), fill) {}

    float& at(int i, int j, int c = 0) {
        return data[(size_t(i) * width + j) * channels + c];
    }
    float at(int i, int j, int c = 0) const {
        return data[(size_t(i) * width + j) * channels + c];
    }
    size_t pixel_count() const { return size_t(height) * width; }
    bool same_extent(const Image& o) const {
        return height == o.height && width == o.width;
    }
};

// Per-pixel {0,1} map, 1 = foreground ink.
struct BinaryMap {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> data;

    BinaryMap() = default;
    BinaryMap(int h, int w, uint8_t fill = 0)
        : height(h), width(w), data(size_t(h) * size_t(w), fill) {}

    uint8_t& at(int i, int j) { return data[size_t(i) * width + j]; }
    uint8_t at(int i, int j) const { return data[size_t(i) * width + j]; }
    size_t count_ones() const {
        size_t n = 0;
        for (uint8_t v : data) n += v;
        return n;
    }
};

// Per-output-pixel absolute (row, col) source coordinates; sampling the
// source at these positions flattens the document.
struct BackwardMap {
    int height = 0;
    int width = 0;
    std::vector<float> row;  // src row per output pixel
    std::vector<float> col;  // src col per output pixel

    BackwardMap() = default;
    BackwardMap(int h, int w)
        : height(h), width(w),
          row(size_t(h) * size_t(w), 0.0f), col(size_t(h) * size_t(w), 0.0f) {}

    static BackwardMap identity(int h, int w) {
        BackwardMap bm(h, w);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                bm.row[size_t(i) * w + j] = float(i);
                bm.col[size_t(i) * w + j] = float(j);
            }
        return bm;
    }
};

// Per-pixel (dy, dx) displacement from image A to image B.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> dy, dx;

    FlowField() = default;
    FlowField(int h, int w)
        : height(h), width(w),
          dy(size_t(h) * size_t(w), 0.0f), dx(size_t(h) * size_t(w), 0.0f) {}
};

// PNG (8-bit gray/RGB/RGBA, alpha composited over white) or binary PGM/PPM.
Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path);

inline uint8_t float_to_byte(float v) {
    float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return uint8_t(c * 255.0f + 0.5f);
}

// On-disk convention for binary maps: ink black on white.
inline Image binary_to_image(const BinaryMap& bm) {
    Image img(bm.height, bm.width, 1);
    for (size_t p = 0; p < bm.data.size(); ++p) img.data[p] = bm.data[p] ? 0.0f : 1.0f;
    return img;
}

inline BinaryMap binary_from_image(const Image& img) {
    BinaryMap bm(img.height, img.width);
    for (size_t p = 0; p < bm.data.size(); ++p)
        bm.data[p] = img.data[p * img.channels] < 0.5f ? 1 : 0;
    return bm;
}

}  // namespace docres
