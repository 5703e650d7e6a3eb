#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lesref {

// Binary raster, values strictly 0/1.
struct Mask {
    int h = 0, w = 0;
    std::vector<uint8_t> v;

    Mask() = default;
    Mask(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), v(size_t(h_) * w_, fill) {}

    uint8_t& at(int y, int x) { return v[size_t(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[size_t(y) * w + x]; }
    bool in_bounds(int y, int x) const { return y >= 0 && y < h && x >= 0 && x < w; }
    int64_t count() const;  // foreground pixels
    bool empty_fg() const { return count() == 0; }
    bool full_fg() const { return count() == int64_t(h) * w; }
    bool operator==(const Mask&) const = default;
};

// RGB image, interleaved, 16-bit per channel, unit interval = v/65535.
struct ImageU16 {
    int h = 0, w = 0;
    std::vector<uint16_t> v;  // h*w*3

    ImageU16() = default;
    ImageU16(int h_, int w_, uint16_t fill = 0) : h(h_), w(w_), v(size_t(h_) * w_ * 3, fill) {}

    uint16_t& at(int y, int x, int c) { return v[(size_t(y) * w + x) * 3 + c]; }
    uint16_t at(int y, int x, int c) const { return v[(size_t(y) * w + x) * 3 + c]; }
    bool operator==(const ImageU16&) const = default;
};

// Single-channel float raster (probability canvases, distance maps).
struct FloatRaster {
    int h = 0, w = 0;
    std::vector<float> v;

    FloatRaster() = default;
    FloatRaster(int h_, int w_, float fill = 0.f) : h(h_), w(w_), v(size_t(h_) * w_, fill) {}

    float& at(int y, int x) { return v[size_t(y) * w + x]; }
    float at(int y, int x) const { return v[size_t(y) * w + x]; }
};

struct RectI {
    int x = 0, y = 0, w = 0, h = 0;
    bool operator==(const RectI&) const = default;
};

// --- file I/O (PNG/JPG via OpenCV codecs) ---
Mask load_mask(const std::filesystem::path&);          // any nonzero pixel -> 1
void save_mask_png(const Mask&, const std::filesystem::path&);  // 0/255, 8-bit
ImageU16 load_image_rgb(const std::filesystem::path&); // 8-bit sources scaled to 16-bit
void save_image_png16(const ImageU16&, const std::filesystem::path&);

// --- resampling; half-pixel-center convention: src = (dst+0.5)*scale - 0.5 ---
ImageU16 resize_bilinear(const ImageU16&, int oh, int ow);
FloatRaster resize_bilinear(const FloatRaster&, int oh, int ow);
Mask resize_nearest(const Mask&, int oh, int ow);

ImageU16 crop(const ImageU16&, const RectI&);
Mask crop(const Mask&, const RectI&);

// --- morphology with a disc structuring element of radius r ---
Mask dilate_disc(const Mask&, int r);
Mask erode_disc(const Mask&, int r);
Mask close_disc(const Mask&, int r);  // dilate then erode

Mask threshold_raster(const FloatRaster&, float tau);  // v >= tau
Mask boundary_pixels(const Mask&);  // mask minus its 4-neighbour erosion

}  // namespace lesref
