#include <cmath>
#include <cstdint>
#include <vector>

#include "kernels_detail.hpp"

// Reference backend: straight per-output-element loops, no parallelism.
// Kept simple on purpose -- the OpenMP backend is validated against this.
namespace lesref::nn::kernels::serial {

using detail::kEdtInf;

void conv2d_fwd(const double* x, int ci, int h, int w,
                const double* wt, const double* bias, int co, int k, int pad,
                double* y) {
    const int oh = h + 2 * pad - k + 1;
    const int ow = w + 2 * pad - k + 1;
    for (int o = 0; o < co; ++o) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias ? bias[o] : 0.0;
                for (int i = 0; i < ci; ++i) {
                    for (int ky = 0; ky < k; ++ky) {
                        int iy = oy + ky - pad;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            int ix = ox + kx - pad;
                            if (ix < 0 || ix >= w) continue;
                            acc += wt[((size_t(o) * ci + i) * k + ky) * k + kx] *
                                   x[(size_t(i) * h + iy) * w + ix];
                        }
                    }
                }
                y[(size_t(o) * oh + oy) * ow + ox] = acc;
            }
        }
    }
}

void conv2d_bwd_input(const double* gy, const double* wt,
                      int ci, int co, int h, int w, int k, int pad,
                      double* gx) {
    const int oh = h + 2 * pad - k + 1;
    const int ow = w + 2 * pad - k + 1;
    for (int i = 0; i < ci; ++i) {
        for (int iy = 0; iy < h; ++iy) {
            for (int ix = 0; ix < w; ++ix) {
                double acc = 0.0;
                for (int o = 0; o < co; ++o) {
                    for (int ky = 0; ky < k; ++ky) {
                        int oy = iy - ky + pad;
                        if (oy < 0 || oy >= oh) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            int ox = ix - kx + pad;
                            if (ox < 0 || ox >= ow) continue;
                            acc += gy[(size_t(o) * oh + oy) * ow + ox] *
                                   wt[((size_t(o) * ci + i) * k + ky) * k + kx];
                        }
                    }
                }
                gx[(size_t(i) * h + iy) * w + ix] = acc;
            }
        }
    }
}

void conv2d_bwd_weight(const double* x, const double* gy,
                       int ci, int co, int h, int w, int k, int pad,
                       double* gw, double* gb) {
    const int oh = h + 2 * pad - k + 1;
    const int ow = w + 2 * pad - k + 1;
    for (int o = 0; o < co; ++o) {
        for (int i = 0; i < ci; ++i) {
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    double acc = 0.0;
                    for (int oy = 0; oy < oh; ++oy) {
                        int iy = oy + ky - pad;
                        if (iy < 0 || iy >= h) continue;
                        for (int ox = 0; ox < ow; ++ox) {
                            int ix = ox + kx - pad;
                            if (ix < 0 || ix >= w) continue;
                            acc += gy[(size_t(o) * oh + oy) * ow + ox] *
                                   x[(size_t(i) * h + iy) * w + ix];
                        }
                    }
                    gw[((size_t(o) * ci + i) * k + ky) * k + kx] = acc;
                }
            }
        }
    }
    if (gb) {
        for (int o = 0; o < co; ++o) {
            double acc = 0.0;
            for (int64_t p = 0; p < int64_t(oh) * ow; ++p) acc += gy[size_t(o) * oh * ow + p];
            gb[o] = acc;
        }
    }
}

void disc_dilate_u8(const uint8_t* in, int h, int w, int r, uint8_t* out) {
    auto span = detail::disc_spans(r);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            uint8_t hit = 0;
            for (int dy = -r; dy <= r && !hit; ++dy) {
                int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                int s = span[dy + r];
                for (int dx = -s; dx <= s; ++dx) {
                    int xx = x + dx;
                    if (xx < 0 || xx >= w) continue;
                    if (in[size_t(yy) * w + xx]) { hit = 1; break; }
                }
            }
            out[size_t(y) * w + x] = hit;
        }
    }
}

void disc_erode_u8(const uint8_t* in, int h, int w, int r, uint8_t* out) {
    auto span = detail::disc_spans(r);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            uint8_t keep = 1;
            for (int dy = -r; dy <= r && keep; ++dy) {
                int yy = y + dy;
                int s = span[dy + r];
                for (int dx = -s; dx <= s; ++dx) {
                    int xx = x + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w ||
                        !in[size_t(yy) * w + xx]) {
                        keep = 0;
                        break;
                    }
                }
            }
            out[size_t(y) * w + x] = keep;
        }
    }
}

void edt_sq(const uint8_t* is_site, int h, int w, double* out) {
    std::vector<double> col(h), dcol(h), f(std::max(h, w)), d(std::max(h, w)), z(std::max(h, w) + 1);
    std::vector<int> vv(std::max(h, w));
    // columns first
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = is_site[size_t(y) * w + x] ? 0.0 : kEdtInf;
        detail::dt1d(col.data(), h, dcol.data(), vv.data(), z.data());
        for (int y = 0; y < h; ++y) out[size_t(y) * w + x] = dcol[y];
    }
    // then rows
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = out[size_t(y) * w + x];
        detail::dt1d(f.data(), w, d.data(), vv.data(), z.data());
        for (int x = 0; x < w; ++x) out[size_t(y) * w + x] = d[x];
    }
}

void slic_assign(const double* feat, const double* xy, int n, int c,
                 const double* cent, int k, double m_over_s,
                 int* labels, double* costs) {
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

}  // namespace lesref::nn::kernels::serial
