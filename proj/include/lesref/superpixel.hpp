#pragma once

#include <cstdint>
#include <vector>

#include "lesref/nn/tensor.hpp"
#include "lesref/raster.hpp"

namespace lesref::sp {

struct SuperpixelLabeling {
    int h = 0, w = 0;
    std::vector<int32_t> labels;  // -1 outside the mask, else 0..n_eff-1
    int n_eff = 0;
    int iterations = 0;
    std::vector<double> cost_history;  // total assignment cost per pass

    int32_t at(int y, int x) const { return labels[size_t(y) * w + x]; }
    Mask region(int label) const;  // binary mask of one superpixel
};

// 0.1 * mean L2 norm of the masked feature vectors (floored away from zero).
double auto_compactness(const nn::Tensor& features, const Mask& mask);

// Masked SLIC over feature + spatial space. Seeds at successive maxima of the
// in-mask distance transform; cost ||f - cf|| + compactness * ||x - cx|| / S,
// S = sqrt(|mask| / n_eff). Iterates until labels settle, max_iters passes, or
// a pass fails to lower total cost (kept non-increasing by reverting).
// Small disconnected fragments (< |mask| / (4 n_eff)) merge into the nearest
// adjacent label. compactness < 0 selects auto_compactness.
SuperpixelLabeling mask_slic(const nn::Tensor& features, const Mask& mask, int n_sp,
                             double compactness = -1.0, int max_iters = 10);

}  // namespace lesref::sp
