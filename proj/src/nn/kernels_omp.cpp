#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "kernels_detail.hpp"

// Production backend. Parallelism is always over independent output elements
// and the per-element accumulation order matches the serial reference, so the
// two backends agree bit for bit.
namespace lesref::nn::kernels::omp {

using detail::kEdtInf;

void conv2d_fwd(const double* x, int ci, int h, int w,
                const double* wt, const double* bias, int co, int k, int pad,
                double* y) {
    const int oh = h + 2 * pad - k + 1;
    const int ow = w + 2 * pad - k + 1;
    const size_t oplane = size_t(oh) * ow;
#pragma omp parallel for schedule(static)
    for (int o = 0; o < co; ++o) {
        double* yo = y + size_t(o) * oplane;
        if (bias) {
            std::fill(yo, yo + oplane, bias[o]);
        } else {
            std::memset(yo, 0, oplane * sizeof(double));
        }
        for (int i = 0; i < ci; ++i) {
            const double* xi = x + size_t(i) * h * w;
            for (int ky = 0; ky < k; ++ky) {
                const int oy0 = std::max(0, pad - ky);
                const int oy1 = std::min(oh, h + pad - ky);
                for (int kx = 0; kx < k; ++kx) {
                    const double wv = wt[((size_t(o) * ci + i) * k + ky) * k + kx];
                    const int ox0 = std::max(0, pad - kx);
                    const int ox1 = std::min(ow, w + pad - kx);
                    for (int oy = oy0; oy < oy1; ++oy) {
                        double* yrow = yo + size_t(oy) * ow;
                        const double* xrow = xi + size_t(oy + ky - pad) * w + (kx - pad);
                        for (int ox = ox0; ox < ox1; ++ox) yrow[ox] += wv * xrow[ox];
                    }
                }
            }
        }
    }
}

void conv2d_bwd_input(const double* gy, const double* wt,
                      int ci, int co, int h, int w, int k, int pad,
                      double* gx) {
    const int oh = h + 2 * pad - k + 1;
    const int ow = w + 2 * pad - k + 1;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < ci; ++i) {
        double* gxi = gx + size_t(i) * h * w;
        std::memset(gxi, 0, size_t(h) * w * sizeof(double));
        for (int o = 0; o < co; ++o) {
            const double* gyo = gy + size_t(o) * oh * ow;
            for (int ky = 0; ky < k; ++ky) {
                const int iy0 = std::max(0, ky - pad);
                const int iy1 = std::min(h, oh + ky - pad);
                for (int kx = 0; kx < k; ++kx) {
                    const double wv = wt[((size_t(o) * ci + i) * k + ky) * k + kx];
                    const int ix0 = std::max(0, kx - pad);
                    const int ix1 = std::min(w, ow + kx - pad);
                    for (int iy = iy0; iy < iy1; ++iy) {
                        double* grow = gxi + size_t(iy) * w;
                        const double* gyrow = gyo + size_t(iy - ky + pad) * ow + (pad - kx);
                        for (int ix = ix0; ix < ix1; ++ix) grow[ix] += wv * gyrow[ix];
                    }
                }
            }
        }
    }
}

void conv2d_bwd_weight(const double* x, const double* gy,
                       int ci, int co, int h, int w, int k, int pad,
                       double* gw, double* gb) {
    const int oh = h + 2 * pad - k + 1;
    const int ow = w + 2 * pad - k + 1;
#pragma omp parallel for schedule(static)
    for (int o = 0; o < co; ++o) {
        const double* gyo = gy + size_t(o) * oh * ow;
        for (int i = 0; i < ci; ++i) {
            const double* xi = x + size_t(i) * h * w;
            for (int ky = 0; ky < k; ++ky) {
                const int oy0 = std::max(0, pad - ky);
                const int oy1 = std::min(oh, h + pad - ky);
                for (int kx = 0; kx < k; ++kx) {
                    const int ox0 = std::max(0, pad - kx);
                    const int ox1 = std::min(ow, w + pad - kx);
                    double acc = 0.0;
                    for (int oy = oy0; oy < oy1; ++oy) {
                        const double* gyrow = gyo + size_t(oy) * ow;
                        const double* xrow = xi + size_t(oy + ky - pad) * w + (kx - pad);
                        for (int ox = ox0; ox < ox1; ++ox) acc += gyrow[ox] * xrow[ox];
                    }
                    gw[((size_t(o) * ci + i) * k + ky) * k + kx] = acc;
                }
            }
        }
        if (gb) {
            double acc = 0.0;
            for (int64_t p = 0; p < int64_t(oh) * ow; ++p) acc += gyo[p];
            gb[o] = acc;
        }
    }
}

void disc_dilate_u8(const uint8_t* in, int h, int w, int r, uint8_t* out) {
    auto span = detail::disc_spans(r);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            uint8_t hit = 0;
            for (int dy = -r; dy <= r && !hit; ++dy) {
                int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                int s = span[dy + r];
                int x0 = std::max(0, x - s), x1 = std::min(w - 1, x + s);
                for (int xx = x0; xx <= x1; ++xx) {
                    if (in[size_t(yy) * w + xx]) { hit = 1; break; }
                }
            }
            out[size_t(y) * w + x] = hit;
        }
    }
}

void disc_erode_u8(const uint8_t* in, int h, int w, int r, uint8_t* out) {
    auto span = detail::disc_spans(r);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            uint8_t keep = 1;
            for (int dy = -r; dy <= r && keep; ++dy) {
                int yy = y + dy;
                int s = span[dy + r];
                if (yy < 0 || yy >= h || x - s < 0 || x + s >= w) { keep = 0; break; }
                for (int xx = x - s; xx <= x + s; ++xx) {
                    if (!in[size_t(yy) * w + xx]) { keep = 0; break; }
                }
            }
            out[size_t(y) * w + x] = keep;
        }
    }
}

void edt_sq(const uint8_t* is_site, int h, int w, double* out) {
#pragma omp parallel
    {
        std::vector<double> f(std::max(h, w)), d(std::max(h, w)), z(std::max(h, w) + 1);
        std::vector<int> vv(std::max(h, w));
#pragma omp for schedule(static)
        for (int x = 0; x < w; ++x) {
            for (int y = 0; y < h; ++y) f[y] = is_site[size_t(y) * w + x] ? 0.0 : kEdtInf;
            detail::dt1d(f.data(), h, d.data(), vv.data(), z.data());
            for (int y = 0; y < h; ++y) out[size_t(y) * w + x] = d[y];
        }
#pragma omp for schedule(static)
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) f[x] = out[size_t(y) * w + x];
            detail::dt1d(f.data(), w, d.data(), vv.data(), z.data());
            for (int x = 0; x < w; ++x) out[size_t(y) * w + x] = d[x];
        }
    }
}

void slic_assign(const double* feat, const double* xy, int n, int c,
                 const double* cent, int k, double m_over_s,
                 int* labels, double* costs) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n; ++p) {
        int best = 0;
        double bestc = detail::slic_pixel_cost(feat + size_t(p) * c, xy + size_t(p) * 2, c,
                                               cent, m_over_s);
        for (int q = 1; q < k; ++q) {
            double cc = detail::slic_pixel_cost(feat + size_t(p) * c, xy + size_t(p) * 2, c,
                                                cent + size_t(q) * (c + 2), m_over_s);
            if (cc < bestc) { bestc = cc; best = q; }
        }
        labels[p] = best;
        costs[p] = bestc;
    }
}

void cosine_map_fwd(const double* f, int c, int64_t hw, const double* q,
                    double* d, double* dots, double* fnorms) {
    double qn = 0.0;
    for (int j = 0; j < c; ++j) qn += q[j] * q[j];
    qn = std::sqrt(qn);
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < hw; ++p) {
        double dot = 0.0, fn = 0.0;
        for (int j = 0; j < c; ++j) {
            double fv = f[size_t(j) * hw + p];
            dot += fv * q[j];
            fn += fv * fv;
        }
        fn = std::sqrt(fn);
        dots[p] = dot;
        fnorms[p] = fn;
        double den = fn * qn;
        d[p] = den < 1e-30 ? 1.0 : 1.0 - dot / den;
    }
}

}  // namespace lesref::nn::kernels::omp
