#include "lesref/nn/kernels.hpp"

namespace lesref::nn::kernels {

namespace serial {
void conv2d_fwd(const double*, int, int, int, const double*, const double*, int, int, int, double*);
void conv2d_bwd_input(const double*, const double*, int, int, int, int, int, int, double*);
void conv2d_bwd_weight(const double*, const double*, int, int, int, int, int, int, double*, double*);
void disc_dilate_u8(const uint8_t*, int, int, int, uint8_t*);
void disc_erode_u8(const uint8_t*, int, int, int, uint8_t*);
void edt_sq(const uint8_t*, int, int, double*);
void slic_assign(const double*, const double*, int, int, const double*, int, double, int*, double*);
void cosine_map_fwd(const double*, int, int64_t, const double*, double*, double*, double*);
}  // namespace serial

namespace omp {
void conv2d_fwd(const double*, int, int, int, const double*, const double*, int, int, int, double*);
void conv2d_bwd_input(const double*, const double*, int, int, int, int, int, int, double*);
void conv2d_bwd_weight(const double*, const double*, int, int, int, int, int, int, double*, double*);
void disc_dilate_u8(const uint8_t*, int, int, int, uint8_t*);
void disc_erode_u8(const uint8_t*, int, int, int, uint8_t*);
void edt_sq(const uint8_t*, int, int, double*);
void slic_assign(const double*, const double*, int, int, const double*, int, double, int*, double*);
void cosine_map_fwd(const double*, int, int64_t, const double*, double*, double*, double*);
}  // namespace omp

namespace {
Backend g_backend = Backend::OpenMP;
}

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

void conv2d_fwd(const double* x, int ci, int h, int w,
                const double* wt, const double* bias, int co, int k, int pad,
                double* y) {
    if (g_backend == Backend::Serial)
        serial::conv2d_fwd(x, ci, h, w, wt, bias, co, k, pad, y);
    else
        omp::conv2d_fwd(x, ci, h, w, wt, bias, co, k, pad, y);
}

void conv2d_bwd_input(const double* gy, const double* wt,
                      int ci, int co, int h, int w, int k, int pad, double* gx) {
    if (g_backend == Backend::Serial)
        serial::conv2d_bwd_input(gy, wt, ci, co, h, w, k, pad, gx);
    else
        omp::conv2d_bwd_input(gy, wt, ci, co, h, w, k, pad, gx);
}

void conv2d_bwd_weight(const double* x, const double* gy,
                       int ci, int co, int h, int w, int k, int pad,
                       double* gw, double* gb) {
    if (g_backend == Backend::Serial)
        serial::conv2d_bwd_weight(x, gy, ci, co, h, w, k, pad, gw, gb);
    else
        omp::conv2d_bwd_weight(x, gy, ci, co, h, w, k, pad, gw, gb);
}

void disc_dilate_u8(const uint8_t* in, int h, int w, int r, uint8_t* out) {
    if (g_backend == Backend::Serial)
        serial::disc_dilate_u8(in, h, w, r, out);
    else
        omp::disc_dilate_u8(in, h, w, r, out);
}

void disc_erode_u8(const uint8_t* in, int h, int w, int r, uint8_t* out) {
    if (g_backend == Backend::Serial)
        serial::disc_erode_u8(in, h, w, r, out);
    else
        omp::disc_erode_u8(in, h, w, r, out);
}

void edt_sq(const uint8_t* is_site, int h, int w, double* out) {
    if (g_backend == Backend::Serial)
        serial::edt_sq(is_site, h, w, out);
    else
        omp::edt_sq(is_site, h, w, out);
}

void slic_assign(const double* feat, const double* xy, int n, int c,
                 const double* cent, int k, double m_over_s, int* labels, double* costs) {
    if (g_backend == Backend::Serial)
        serial::slic_assign(feat, xy, n, c, cent, k, m_over_s, labels, costs);
    else
        omp::slic_assign(feat, xy, n, c, cent, k, m_over_s, labels, costs);
}

void cosine_map_fwd(const double* f, int c, int64_t hw, const double* q,
                    double* d, double* dots, double* fnorms) {
    if (g_backend == Backend::Serial)
        serial::cosine_map_fwd(f, c, hw, q, d, dots, fnorms);
    else
        omp::cosine_map_fwd(f, c, hw, q, d, dots, fnorms);
}

}  // namespace lesref::nn::kernels
