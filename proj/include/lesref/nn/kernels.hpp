#pragma once

#include <cstdint>

// Hot data-parallel kernels. Each has a plain serial reference implementation
// and an OpenMP one; both produce bit-identical results because every output
// element is accumulated in the same order by exactly one thread. The backend
// is switchable at runtime (tests run both, bench/kernel_bench times both).
namespace lesref::nn::kernels {

enum class Backend { Serial, OpenMP };

Backend backend();
void set_backend(Backend b);

// Convolution, stride 1, square kernel k, zero padding `pad`.
// x: [ci,h,w], wt: [co,ci,k,k], bias: [co], y: [co,oh,ow] with oh=h+2*pad-k+1.
void conv2d_fwd(const double* x, int ci, int h, int w,
                const double* wt, const double* bias, int co, int k, int pad,
                double* y);
// gx: [ci,h,w] from gy: [co,oh,ow].
void conv2d_bwd_input(const double* gy, const double* wt,
                      int ci, int co, int h, int w, int k, int pad,
                      double* gx);
// gw: [co,ci,k,k], gb: [co].
void conv2d_bwd_weight(const double* x, const double* gy,
                       int ci, int co, int h, int w, int k, int pad,
                       double* gw, double* gb);

// Binary morphology with a disc structuring element {(dy,dx): dy^2+dx^2 <= r^2}.
void disc_dilate_u8(const uint8_t* in, int h, int w, int r, uint8_t* out);
void disc_erode_u8(const uint8_t* in, int h, int w, int r, uint8_t* out);

// Exact squared Euclidean distance transform: out[p] = min over site pixels s
// (is_site[s] != 0) of squared distance p->s. All-zero input -> large sentinel.
void edt_sq(const uint8_t* is_site, int h, int w, double* out);

// Superpixel assignment step. feat: [n,c] gathered masked-pixel features,
// xy: [n,2] (y,x), cent: [k, c+2] (feature part then centroid y,x).
// Cost: ||f - cf||_2 + m_over_s * ||x - cx||_2. Ties -> smaller k.
void slic_assign(const double* feat, const double* xy, int n, int c,
                 const double* cent, int k, double m_over_s,
                 int* labels, double* costs);

// Per-pixel cosine distance to a single vector q.
// f: [c, hw] planar, d/dots/fnorms: [hw]. d = 1 - dot/(|f||q|), guarded so a
// zero-norm operand yields distance 1.
void cosine_map_fwd(const double* f, int c, int64_t hw, const double* q,
                    double* d, double* dots, double* fnorms);

}  // namespace lesref::nn::kernels
