#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lesref/dataset.hpp"
#include "lesref/protonet.hpp"

namespace lesref::train {

struct AugmentConfig {
    double p_affine = 0.5;
    double shift = 0.1;        // fraction of patch size, per axis
    double scale = 0.15;       // 1 +/- scale
    double rotate_deg = 30.0;  // +/- degrees
    double p_blur = 0.3;
    double blur_sigma_min = 0.4, blur_sigma_max = 1.5;
    double p_brightness_contrast = 0.5;
    double brightness = 0.2, contrast = 0.2;  // +/- ranges on unit intensities
};

struct TrainConfig {
    int batch_size = 64;
    int epochs = 120;
    double lr = 1e-4;
    double plateau_factor = 0.5;
    int plateau_patience = 5;
    bool augment_enabled = true;
    AugmentConfig aug;
    uint64_t seed = 0;
    int checkpoint_every = 10;      // epochs between periodic final-checkpoint writes
    double val_fraction = 0.1;      // 0: monitor the training split instead
    double stop_at_train_iou = 0.0;  // > 0 enables early stop on train mean IoU

    void validate() const;
};

struct AffineParams {
    bool applied = false;
    double shift_y = 0, shift_x = 0;  // pixels
    double scale = 1.0;
    double angle_rad = 0.0;
};

struct AugmentResult {
    data::PatchPair pair;
    AffineParams affine;
    bool skipped = false;  // invariants could not be restored
};

// Joint shift/scale/rotate on image+masks (masks nearest, re-binarized), then
// image-only blur and brightness/contrast. Draws a fixed number of variates
// from rng regardless of which stages fire.
AugmentResult augment(const data::PatchPair& pair, std::mt19937_64& rng,
                      const AugmentConfig& cfg);

// Warp with the inverse mapping of `p` about the patch centre; exposed so the
// co-registration oracle can replay the stored transform.
Mask warp_mask_nearest(const Mask& in, const AffineParams& p);
ImageU16 warp_image_bilinear(const ImageU16& in, const AffineParams& p);

// Reduce-on-plateau bookkeeping for a maximised metric: observe() returns true
// when the count of non-improving epochs exceeds `patience` (count then resets,
// best is kept).
struct PlateauScheduler {
    double factor = 0.5;
    int patience = 5;
    double best = -1e300;
    int bad_epochs = 0;

    bool observe(double metric) {
        if (metric > best) {
            best = metric;
            bad_epochs = 0;
            return false;
        }
        if (++bad_epochs > patience) {
            bad_epochs = 0;
            return true;
        }
        return false;
    }
};

struct ClassIoU {
    double mean = 0, stddev = 0;
    int n = 0;
};
struct ValidationReport {
    std::map<std::string, ClassIoU> per_class;
    double mean_iou = 0;  // unweighted over classes with n > 0
    int n_classes = 0;
};

// Patch-level refinement (no cross-patch merging): upsample the probability
// map to patch size, threshold at tau, IoU against the patch ground truth.
ValidationReport validate(const std::vector<data::PatchPair>& pairs, net::RefineNet& net,
                          net::HeadKind head, double tau);

double mask_iou(const Mask& a, const Mask& b);  // NaN when both are empty
FloatRaster upsample_prob(const nn::Tensor& prob, int out_size);
// Probability raster a patch contributes: model output, or the coarse mask
// itself when prototypes are undefined for it.
FloatRaster patch_probability(net::RefineNet& net, const ImageU16& patch, const Mask& coarse,
                              net::HeadKind head);

struct TrainResult {
    double best_val_iou = 0;
    int epochs_run = 0;
    bool diverged = false;
    bool early_stopped = false;
    int skipped_patches = 0;
    std::filesystem::path best_checkpoint, final_checkpoint, metrics_log;
};

TrainResult train(const std::vector<data::PatchPair>& pairs, const net::ModelConfig& model_cfg,
                  const TrainConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace lesref::train
