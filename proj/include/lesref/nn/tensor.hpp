#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace lesref::nn {

// Dense row-major double tensor. Shapes used here are [C,H,W], [N,C], [N], [1].
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
        data.assign(size_t(count(shape)), fill);
    }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }
    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }

    int64_t size() const { return int64_t(data.size()); }
    int dim(int i) const { return shape[size_t(i)]; }
    int ndim() const { return int(shape.size()); }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }
    double& operator[](int64_t i) { return data[size_t(i)]; }
    double operator[](int64_t i) const { return data[size_t(i)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

}  // namespace lesref::nn
