#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lesref/nn/tensor.hpp"
#include "lesref/raster.hpp"

// Reverse-mode autodiff over a dynamically built tape. Nodes are created in
// topological order (creation id), so backward() just walks reachable nodes by
// descending id. Parameters are long-lived leaf nodes whose grads accumulate
// until the optimizer clears them.
namespace lesref::nn {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor val;
    Tensor grad;             // allocated lazily on first backward touch
    bool requires_grad = false;
    int64_t id = 0;
    std::string name;        // set for parameters/buffers only
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;  // accumulate into parents' grads

    void ensure_grad() {
        if (grad.data.empty()) grad = Tensor(val.shape);
    }
};

Var make_leaf(Tensor v, bool requires_grad = false, std::string name = "");
Var make_op(Tensor v, std::vector<Var> parents, std::function<void(Node&)> backprop);

// Seeds d(root)/d(root) = seed and propagates. Root must be scalar; the seed
// lets batch members contribute pre-averaged gradients.
void backward(const Var& root, double seed = 1.0);

namespace ops {

Var conv2d(const Var& x, const Var& w, const Var& b, int pad);
Var relu(const Var& x);
Var maxpool2(const Var& x);
Var upsample2_nearest(const Var& x);
Var concat_channels(const Var& a, const Var& b);
Var reshape(const Var& x, std::vector<int> shape);

// Batch-norm over the spatial dims of a [C,H,W] tensor. Running buffers are
// owned by the layer; updated only when training && update_running.
struct BNBuffers {
    Tensor mean, var;  // [C]
    double momentum = 0.1;
    double eps = 1e-5;
};
Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BNBuffers& buf,
              bool training, bool update_running);

// Mean of per-pixel feature vectors over the region's foreground: [C,H,W] -> [C].
Var masked_mean(const Var& x, const Mask& region);

// Per-pixel cosine distance to prototype q: [C,H,W],[C] -> [H,W].
Var cosine_distance_map(const Var& x, const Var& q);
// Per-pixel squared Euclidean distance (alternative metric): [C,H,W],[C] -> [H,W].
Var sqeuclidean_distance_map(const Var& x, const Var& q);
// Cosine distance between two vectors -> [1].
Var cosine_distance_vec(const Var& u, const Var& v);

// P_fg = exp(-a*d_fg) / (exp(-a*d_fg) + exp(-a*d_bg)), elementwise.
Var two_class_softmax(const Var& d_fg, const Var& d_bg, double scale);
// w_i = exp(s*d_i) / sum_j exp(s*d_j) over a vector.
Var softmax_weights(const Var& d, double scale);
Var stack_rows(const std::vector<Var>& rows);        // N x [C] -> [N,C]
Var weighted_sum_rows(const Var& rows, const Var& w);  // [N,C],[N] -> [C]

Var sigmoid(const Var& x);
// Dice(eps=1) + BCE(probabilities clamped to [1e-7, 1-1e-7]) against a binary
// mask; x is [H,W] of probabilities. Returns [1].
Var dice_bce_loss(const Var& prob, const Mask& gt);

}  // namespace ops
}  // namespace lesref::nn
