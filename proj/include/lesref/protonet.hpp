#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lesref/nn/layers.hpp"
#include "lesref/raster.hpp"
#include "lesref/superpixel.hpp"

// The refinement model: truncated encoder-decoder over (patch + coarse mask),
// mask fusion, prototype extraction, distance-softmax classification, and a
// plain per-pixel linear baseline head.
namespace lesref::net {

enum class HeadKind { Prototypical, PrototypicalSuperpixel, Baseline };
enum class DistanceKind { Cosine, SqEuclidean };

std::string head_name(HeadKind);
HeadKind head_from_name(const std::string&);

struct ModelConfig {
    int input_size = 256;       // H = W
    int depth = 4;              // encoder stages; decoder stops at stride 4
    int base_width = 32;
    int feature_channels = 64;  // C
    int fused_channels = 64;    // C'
    double distance_scale = 20.0;   // softmax sharpening over distances
    double weight_scale = 10.0;     // sharpening of sub-prototype weights
    int superpixel_count = 20;
    double slic_compactness = -1.0;  // < 0: auto
    int slic_iters = 10;
    HeadKind head = HeadKind::Prototypical;
    DistanceKind distance = DistanceKind::Cosine;
    double threshold = 0.5;

    int stride() const { return 4; }
    int feature_size() const { return input_size / 4; }
    void validate() const;
    bool same_shape(const ModelConfig& o) const;  // shape-determining fields equal
};

class RefineNet {
public:
    explicit RefineNet(const ModelConfig& cfg, uint64_t init_seed = 0);

    const ModelConfig& config() const { return cfg_; }
    const nn::NamedParams& parameters() const { return params_; }
    const nn::NamedBuffers& buffers() const { return buffers_; }

    // 4-channel input from an RGB patch (unit interval) and its coarse mask.
    static nn::Tensor to_input(const ImageU16& patch, const Mask& coarse);

    // Backbone: [4,H,W] -> [C,H/4,W/4].
    nn::Var extract_features(const nn::Tensor& input, bool training, bool update_bn);

    struct Fused {
        nn::Var fmap;   // [C',H',W']
        Mask m_prime;   // coarse mask at stride 4
    };
    Fused fuse_mask(const nn::Var& features, const Mask& coarse, bool training, bool update_bn);

    struct Output {
        nn::Var prob;     // [H',W'] foreground probability; null when degenerate
        nn::Var fused;    // [C',H',W']
        Mask m_prime;
        bool degenerate = false;  // stride-4 coarse mask empty or full
        std::optional<sp::SuperpixelLabeling> labeling;  // superpixel head only
    };
    Output forward(const ImageU16& patch, const Mask& coarse, HeadKind head, bool training,
                   bool update_bn, const sp::SuperpixelLabeling* fixed_labeling = nullptr);

    nn::Var baseline_logits(const nn::Var& fused) const;  // [1,H',W']

private:
    ModelConfig cfg_;
    std::vector<nn::ConvBNReLU> enc_;     // two blocks per stage, flattened
    std::vector<nn::ConvBNReLU> bott_;    // two blocks
    std::vector<nn::ConvBNReLU> dec_;     // two blocks per up level
    nn::ConvBNReLU feature_head_;         // 1x1 -> C
    nn::ConvBNReLU fusion_;               // 1x1 (C+1) -> C'
    nn::Conv2dLayer baseline_head_;       // 1x1 C' -> 1
    nn::NamedParams params_;
    nn::NamedBuffers buffers_;
};

// Mask average pooling over a region (throws on an empty region).
nn::Var compute_prototype(const nn::Var& fused, const Mask& region);

nn::Var distance_map(const nn::Var& fused, const nn::Var& proto, DistanceKind kind);

// Softmax over distances to the two prototypes; returns the foreground map.
nn::Var classify_pixels(const nn::Var& fused, const nn::Var& proto_fg, const nn::Var& proto_bg,
                        const ModelConfig& cfg);

struct WeightedPrototype {
    nn::Var proto;               // convex combination of sub-prototypes
    nn::Var weights;             // [N_eff]
    std::vector<nn::Var> subs;   // per-superpixel prototypes
};
WeightedPrototype weighted_prototype(const nn::Var& fused, const sp::SuperpixelLabeling& labeling,
                                     const nn::Var& proto_bg, const ModelConfig& cfg);

// Dice + BCE between a stride-4 probability map and the ground truth mask
// (nearest-downsampled by the caller to H'xW').
nn::Var compute_loss(const nn::Var& prob, const Mask& gt_at_stride);

// --- checkpoints ---
void save_checkpoint(const RefineNet& net, int64_t step, const std::filesystem::path& path);
struct Checkpoint {
    ModelConfig config;
    int64_t step = 0;
};
Checkpoint load_checkpoint(RefineNet& net, const std::filesystem::path& path);  // shapes must match
ModelConfig peek_checkpoint_config(const std::filesystem::path& path);

}  // namespace lesref::net
