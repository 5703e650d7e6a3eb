#include "lesref/nn/layers.hpp"

#include <cmath>

namespace lesref::nn {

void Conv2dLayer::build(int cin_, int cout_, int k_, std::mt19937_64& rng) {
    cin = cin_;
    cout = cout_;
    k = k_;
    pad = (k_ - 1) / 2;
    Tensor wt({cout, cin, k, k});
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (double(cin) * k * k)));
    for (auto& v : wt.data) v = dist(rng);
    w = make_leaf(std::move(wt), true);
    b = make_leaf(Tensor({cout}), true);
}

void Conv2dLayer::collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".w", w);
    out.emplace_back(prefix + ".b", b);
}

void BatchNormLayer::build(int c) {
    gamma = make_leaf(Tensor({c}, 1.0), true);
    beta = make_leaf(Tensor({c}), true);
    buf.mean = Tensor({c}, 0.0);
    buf.var = Tensor({c}, 1.0);
}

void BatchNormLayer::collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".gamma", gamma);
    out.emplace_back(prefix + ".beta", beta);
}

void BatchNormLayer::collect_buffers(NamedBuffers& out, const std::string& prefix) {
    out.emplace_back(prefix + ".running_mean", &buf.mean);
    out.emplace_back(prefix + ".running_var", &buf.var);
}

void Adam::step(const NamedParams& params) {
    if (m.empty()) {
        for (const auto& [name, p] : params) {
            m.emplace_back(p->val.shape);
            v.emplace_back(p->val.shape);
        }
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, double(t));
    const double bc2 = 1.0 - std::pow(beta2, double(t));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].second;
        if (p->grad.data.empty()) continue;
        for (int64_t j = 0; j < p->val.size(); ++j) {
            double g = p->grad[j];
            m[i][j] = beta1 * m[i][j] + (1 - beta1) * g;
            v[i][j] = beta2 * v[i][j] + (1 - beta2) * g * g;
            double mh = m[i][j] / bc1;
            double vh = v[i][j] / bc2;
            p->val[j] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
    zero_grads(params);
}

void Adam::zero_grads(const NamedParams& params) {
    for (const auto& [name, p] : params)
        if (!p->grad.data.empty()) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
}

}  // namespace lesref::nn
