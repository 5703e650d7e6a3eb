#include "lesref/raster.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "lesref/common.hpp"
#include "lesref/nn/kernels.hpp"

namespace lesref {

int64_t Mask::count() const {
    int64_t n = 0;
    for (uint8_t b : v) n += (b != 0);
    return n;
}

Mask load_mask(const std::filesystem::path& p) {
    cv::Mat m = cv::imread(p.string(), cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw ValidationError("cannot read mask image: " + p.string());
    Mask out(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x)
            out.at(y, x) = m.at<uint8_t>(y, x) != 0 ? 1 : 0;
    return out;
}

void save_mask_png(const Mask& m, const std::filesystem::path& p) {
    cv::Mat img(m.h, m.w, CV_8UC1);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x)
            img.at<uint8_t>(y, x) = m.at(y, x) ? 255 : 0;
    if (!cv::imwrite(p.string(), img))
        throw std::runtime_error("cannot write mask: " + p.string());
}

ImageU16 load_image_rgb(const std::filesystem::path& p) {
    cv::Mat m = cv::imread(p.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw ValidationError("cannot read image: " + p.string());
    if (m.channels() == 1) cv::cvtColor(m, m, cv::COLOR_GRAY2BGR);
    if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
    ImageU16 out(m.rows, m.cols);
    if (m.depth() == CV_16U) {
        for (int y = 0; y < m.rows; ++y)
            for (int x = 0; x < m.cols; ++x) {
                auto px = m.at<cv::Vec3w>(y, x);  // BGR
                out.at(y, x, 0) = px[2];
                out.at(y, x, 1) = px[1];
                out.at(y, x, 2) = px[0];
            }
    } else if (m.depth() == CV_8U) {
        for (int y = 0; y < m.rows; ++y)
            for (int x = 0; x < m.cols; ++x) {
                auto px = m.at<cv::Vec3b>(y, x);
                out.at(y, x, 0) = uint16_t(px[2]) * 257;  // 255 -> 65535
                out.at(y, x, 1) = uint16_t(px[1]) * 257;
                out.at(y, x, 2) = uint16_t(px[0]) * 257;
            }
    } else {
        throw ValidationError("unsupported image depth: " + p.string());
    }
    return out;
}

void save_image_png16(const ImageU16& img, const std::filesystem::path& p) {
    cv::Mat m(img.h, img.w, CV_16UC3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            m.at<cv::Vec3w>(y, x) = {img.at(y, x, 2), img.at(y, x, 1), img.at(y, x, 0)};
    if (!cv::imwrite(p.string(), m))
        throw std::runtime_error("cannot write image: " + p.string());
}

namespace {

// bilinear sample of one channel at continuous (sy, sx), edge-clamped
template <typename GetFn>
double bilinear_at(GetFn get, int h, int w, double sy, double sx) {
    sy = std::clamp(sy, 0.0, double(h - 1));
    sx = std::clamp(sx, 0.0, double(w - 1));
    int y0 = int(std::floor(sy)), x0 = int(std::floor(sx));
    int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
    double fy = sy - y0, fx = sx - x0;
    double a = get(y0, x0) * (1 - fx) + get(y0, x1) * fx;
    double b = get(y1, x0) * (1 - fx) + get(y1, x1) * fx;
    return a * (1 - fy) + b * fy;
}

inline int nearest_index(int dst, int src_n, double scale) {
    double s = (dst + 0.5) * scale - 0.5;
    int i = int(std::floor(s + 0.5));
    return std::clamp(i, 0, src_n - 1);
}

}  // namespace

ImageU16 resize_bilinear(const ImageU16& in, int oh, int ow) {
    ImageU16 out(oh, ow);
    double sy = double(in.h) / oh, sx = double(in.w) / ow;
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = bilinear_at([&](int yy, int xx) { return double(in.at(yy, xx, c)); },
                                       in.h, in.w, (y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5);
                out.at(y, x, c) = uint16_t(std::lround(std::clamp(v, 0.0, 65535.0)));
            }
    return out;
}

FloatRaster resize_bilinear(const FloatRaster& in, int oh, int ow) {
    FloatRaster out(oh, ow);
    double sy = double(in.h) / oh, sx = double(in.w) / ow;
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            out.at(y, x) = float(bilinear_at([&](int yy, int xx) { return double(in.at(yy, xx)); },
                                             in.h, in.w, (y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5));
    return out;
}

Mask resize_nearest(const Mask& in, int oh, int ow) {
    Mask out(oh, ow);
    double sy = double(in.h) / oh, sx = double(in.w) / ow;
    std::vector<int> xi(ow);
    for (int x = 0; x < ow; ++x) xi[x] = nearest_index(x, in.w, sx);
    for (int y = 0; y < oh; ++y) {
        int yy = nearest_index(y, in.h, sy);
        for (int x = 0; x < ow; ++x) out.at(y, x) = in.at(yy, xi[x]);
    }
    return out;
}

ImageU16 crop(const ImageU16& in, const RectI& r) {
    ImageU16 out(r.h, r.w);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = in.at(r.y + y, r.x + x, c);
    return out;
}

Mask crop(const Mask& in, const RectI& r) {
    Mask out(r.h, r.w);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x) out.at(y, x) = in.at(r.y + y, r.x + x);
    return out;
}

Mask dilate_disc(const Mask& m, int r) {
    if (r <= 0) return m;
    Mask out(m.h, m.w);
    nn::kernels::disc_dilate_u8(m.v.data(), m.h, m.w, r, out.v.data());
    return out;
}

Mask erode_disc(const Mask& m, int r) {
    if (r <= 0) return m;
    Mask out(m.h, m.w);
    nn::kernels::disc_erode_u8(m.v.data(), m.h, m.w, r, out.v.data());
    return out;
}

Mask close_disc(const Mask& m, int r) {
    if (r <= 0) return m;
    // pad by r so the intermediate dilation is not clipped; keeps the result a
    // superset of the input
    Mask padded(m.h + 2 * r, m.w + 2 * r);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) padded.at(y + r, x + r) = m.at(y, x);
    Mask d = dilate_disc(padded, r);
    Mask e = erode_disc(d, r);
    Mask out(m.h, m.w);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) out.at(y, x) = e.at(y + r, x + r);
    return out;
}

Mask threshold_raster(const FloatRaster& p, float tau) {
    Mask out(p.h, p.w);
    for (size_t i = 0; i < p.v.size(); ++i) out.v[i] = p.v[i] >= tau ? 1 : 0;
    return out;
}

Mask boundary_pixels(const Mask& m) {
    Mask out(m.h, m.w);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) {
            if (!m.at(y, x)) continue;
            bool interior = y > 0 && y < m.h - 1 && x > 0 && x < m.w - 1 &&
                            m.at(y - 1, x) && m.at(y + 1, x) && m.at(y, x - 1) && m.at(y, x + 1);
            out.at(y, x) = interior ? 0 : 1;
        }
    return out;
}

}  // namespace lesref
