#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lesref/nn/autodiff.hpp"

namespace lesref::nn {

using NamedParams = std::vector<std::pair<std::string, Var>>;
using NamedBuffers = std::vector<std::pair<std::string, Tensor*>>;

struct Conv2dLayer {
    Var w, b;
    int cin = 0, cout = 0, k = 3, pad = 1;

    void build(int cin_, int cout_, int k_, std::mt19937_64& rng);
    Var forward(const Var& x) const { return ops::conv2d(x, w, b, pad); }
    void collect(NamedParams& out, const std::string& prefix) const;
};

struct BatchNormLayer {
    Var gamma, beta;
    ops::BNBuffers buf;

    void build(int c);
    Var forward(const Var& x, bool training, bool update_running) {
        return ops::batchnorm(x, gamma, beta, buf, training, update_running);
    }
    void collect(NamedParams& out, const std::string& prefix) const;
    void collect_buffers(NamedBuffers& out, const std::string& prefix);
};

// conv + batchnorm + relu
struct ConvBNReLU {
    Conv2dLayer conv;
    BatchNormLayer bn;

    void build(int cin, int cout, int k, std::mt19937_64& rng) {
        conv.build(cin, cout, k, rng);
        bn.build(cout);
    }
    Var forward(const Var& x, bool training, bool update_running) {
        return ops::relu(bn.forward(conv.forward(x), training, update_running));
    }
    void collect(NamedParams& out, const std::string& prefix) const {
        conv.collect(out, prefix + ".conv");
        bn.collect(out, prefix + ".bn");
    }
    void collect_buffers(NamedBuffers& out, const std::string& prefix) {
        bn.collect_buffers(out, prefix + ".bn");
    }
};

struct Adam {
    double lr = 1e-4;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int64_t t = 0;
    std::vector<Tensor> m, v;

    void step(const NamedParams& params);           // applies grads, then clears them
    static void zero_grads(const NamedParams& params);
};

}  // namespace lesref::nn
