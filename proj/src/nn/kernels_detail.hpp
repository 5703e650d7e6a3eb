#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

// Shared pieces for the serial and OpenMP kernel backends.
namespace lesref::nn::kernels::detail {

constexpr double kEdtInf = 1e18;

// 1D squared-distance lower envelope (Felzenszwalb/Huttenlocher).
// d[i] = min_j (i-j)^2 + f[j]. Scratch vectors supplied by the caller.
inline void dt1d(const double* f, int n, double* d, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kEdtInf;
    z[1] = kEdtInf;
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kEdtInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        int p = v[k];
        d[q] = double(q - p) * (q - p) + f[p];
    }
}

// Disc offsets as per-dy column spans: for dy in [-r,r], |dx| <= span[dy+r].
inline std::vector<int> disc_spans(int r) {
    std::vector<int> span(2 * r + 1, 0);
    for (int dy = -r; dy <= r; ++dy)
        span[dy + r] = int(std::floor(std::sqrt(double(r) * r - double(dy) * dy) + 1e-9));
    return span;
}

inline double slic_pixel_cost(const double* fp, const double* yx, int c,
                              const double* cent, double m_over_s) {
    double df = 0.0;
    for (int j = 0; j < c; ++j) {
        double e = fp[j] - cent[j];
        df += e * e;
    }
    double dy = yx[0] - cent[c];
    double dx = yx[1] - cent[c + 1];
    return std::sqrt(df) + m_over_s * std::sqrt(dy * dy + dx * dx);
}

}  // namespace lesref::nn::kernels::detail
