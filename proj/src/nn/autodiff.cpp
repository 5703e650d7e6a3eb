#include "lesref/nn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "lesref/common.hpp"
#include "lesref/nn/kernels.hpp"

namespace lesref::nn {

namespace {
int64_t g_next_id = 0;

bool any_requires(const std::vector<Var>& ps) {
    for (const auto& p : ps)
        if (p->requires_grad) return true;
    return false;
}
}  // namespace

Var make_leaf(Tensor v, bool requires_grad, std::string name) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    n->requires_grad = requires_grad;
    n->id = g_next_id++;
    n->name = std::move(name);
    return n;
}

Var make_op(Tensor v, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    n->requires_grad = any_requires(parents);
    n->id = g_next_id++;
    n->parents = std::move(parents);
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

void backward(const Var& root, double seed) {
    if (root->val.size() != 1)
        throw std::logic_error("backward: root must be a scalar");
    root->ensure_grad();
    root->grad[0] += seed;

    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{root.get()};
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        order.push_back(n);
        for (const auto& p : n->parents)
            if (p->requires_grad) stack.push_back(p.get());
    }
    std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id > b->id; });
    for (Node* n : order)
        if (n->backprop) n->backprop(*n);
}

namespace ops {

namespace {
void check(bool cond, const char* msg) {
    if (!cond) throw ValidationError(msg);
}
}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int pad) {
    check(x->val.ndim() == 3 && w->val.ndim() == 4, "conv2d: bad ranks");
    const int ci = x->val.dim(0), h = x->val.dim(1), wd = x->val.dim(2);
    const int co = w->val.dim(0), k = w->val.dim(2);
    check(w->val.dim(1) == ci && w->val.dim(3) == k, "conv2d: weight shape mismatch");
    check(b->val.size() == co, "conv2d: bias shape mismatch");
    const int oh = h + 2 * pad - k + 1, ow = wd + 2 * pad - k + 1;
    check(oh > 0 && ow > 0, "conv2d: output would be empty");

    Tensor y({co, oh, ow});
    kernels::conv2d_fwd(x->val.ptr(), ci, h, wd, w->val.ptr(), b->val.ptr(), co, k, pad, y.ptr());

    Var xv = x, wv = w, bv = b;
    return make_op(std::move(y), {x, w, b}, [=](Node& self) {
        if (xv->requires_grad) {
            Tensor gx({ci, h, wd});
            kernels::conv2d_bwd_input(self.grad.ptr(), wv->val.ptr(), ci, co, h, wd, k, pad,
                                      gx.ptr());
            xv->ensure_grad();
            for (int64_t i = 0; i < gx.size(); ++i) xv->grad[i] += gx[i];
        }
        if (wv->requires_grad || bv->requires_grad) {
            Tensor gw(wv->val.shape), gb(bv->val.shape);
            kernels::conv2d_bwd_weight(xv->val.ptr(), self.grad.ptr(), ci, co, h, wd, k, pad,
                                       gw.ptr(), gb.ptr());
            if (wv->requires_grad) {
                wv->ensure_grad();
                for (int64_t i = 0; i < gw.size(); ++i) wv->grad[i] += gw[i];
            }
            if (bv->requires_grad) {
                bv->ensure_grad();
                for (int64_t i = 0; i < gb.size(); ++i) bv->grad[i] += gb[i];
            }
        }
    });
}

Var relu(const Var& x) {
    Tensor y = x->val;
    for (auto& v : y.data) v = v > 0 ? v : 0;
    Var xv = x;
    return make_op(std::move(y), {x}, [=](Node& self) {
        if (!xv->requires_grad) return;
        xv->ensure_grad();
        for (int64_t i = 0; i < self.grad.size(); ++i)
            if (xv->val[i] > 0) xv->grad[i] += self.grad[i];
    });
}

Var maxpool2(const Var& x) {
    check(x->val.ndim() == 3, "maxpool2: rank");
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    check(h % 2 == 0 && w % 2 == 0, "maxpool2: dims must be even");
    const int oh = h / 2, ow = w / 2;
    Tensor y({c, oh, ow});
    auto arg = std::make_shared<std::vector<int64_t>>(size_t(c) * oh * ow);
    for (int cc = 0; cc < c; ++cc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                int64_t best = -1;
                double bv = -1e300;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        int64_t idx = (int64_t(cc) * h + 2 * oy + dy) * w + 2 * ox + dx;
                        if (x->val[idx] > bv) {
                            bv = x->val[idx];
                            best = idx;
                        }
                    }
                y[(int64_t(cc) * oh + oy) * ow + ox] = bv;
                (*arg)[(size_t(cc) * oh + oy) * ow + ox] = best;
            }
    Var xv = x;
    return make_op(std::move(y), {x}, [=](Node& self) {
        if (!xv->requires_grad) return;
        xv->ensure_grad();
        for (int64_t i = 0; i < self.grad.size(); ++i) xv->grad[(*arg)[size_t(i)]] += self.grad[i];
    });
}

Var upsample2_nearest(const Var& x) {
    check(x->val.ndim() == 3, "upsample2: rank");
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    Tensor y({c, 2 * h, 2 * w});
    for (int cc = 0; cc < c; ++cc)
        for (int yy = 0; yy < 2 * h; ++yy)
            for (int xx = 0; xx < 2 * w; ++xx)
                y[(int64_t(cc) * 2 * h + yy) * 2 * w + xx] =
                    x->val[(int64_t(cc) * h + yy / 2) * w + xx / 2];
    Var xv = x;
    return make_op(std::move(y), {x}, [=](Node& self) {
        if (!xv->requires_grad) return;
        xv->ensure_grad();
        for (int cc = 0; cc < c; ++cc)
            for (int yy = 0; yy < 2 * h; ++yy)
                for (int xx = 0; xx < 2 * w; ++xx)
                    xv->grad[(int64_t(cc) * h + yy / 2) * w + xx / 2] +=
                        self.grad[(int64_t(cc) * 2 * h + yy) * 2 * w + xx];
    });
}

Var concat_channels(const Var& a, const Var& b) {
    check(a->val.ndim() == 3 && b->val.ndim() == 3, "concat: rank");
    check(a->val.dim(1) == b->val.dim(1) && a->val.dim(2) == b->val.dim(2),
          "concat: spatial dims differ");
    const int ca = a->val.dim(0), cb = b->val.dim(0);
    const int h = a->val.dim(1), w = a->val.dim(2);
    Tensor y({ca + cb, h, w});
    std::copy(a->val.data.begin(), a->val.data.end(), y.data.begin());
    std::copy(b->val.data.begin(), b->val.data.end(), y.data.begin() + a->val.size());
    Var av = a, bv = b;
    return make_op(std::move(y), {a, b}, [=](Node& self) {
        const int64_t na = av->val.size();
        if (av->requires_grad) {
            av->ensure_grad();
            for (int64_t i = 0; i < na; ++i) av->grad[i] += self.grad[i];
        }
        if (bv->requires_grad) {
            bv->ensure_grad();
            for (int64_t i = 0; i < bv->val.size(); ++i) bv->grad[i] += self.grad[na + i];
        }
    });
}

Var reshape(const Var& x, std::vector<int> shape) {
    check(Tensor::count(shape) == x->val.size(), "reshape: element count mismatch");
    Tensor y = x->val;
    y.shape = std::move(shape);
    Var xv = x;
    return make_op(std::move(y), {x}, [=](Node& self) {
        if (!xv->requires_grad) return;
        xv->ensure_grad();
        for (int64_t i = 0; i < self.grad.size(); ++i) xv->grad[i] += self.grad[i];
    });
}

Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BNBuffers& buf,
              bool training, bool update_running) {
    check(x->val.ndim() == 3, "batchnorm: rank");
    const int c = x->val.dim(0);
    const int64_t m = int64_t(x->val.dim(1)) * x->val.dim(2);
    check(gamma->val.size() == c && beta->val.size() == c, "batchnorm: affine shape");
    check(buf.mean.size() == c && buf.var.size() == c, "batchnorm: buffer shape");

    Tensor y(x->val.shape);
    auto xhat = std::make_shared<Tensor>(x->val.shape);
    auto invstd = std::make_shared<Tensor>(std::vector<int>{c});
    auto mean = std::make_shared<Tensor>(std::vector<int>{c});

    for (int cc = 0; cc < c; ++cc) {
        const double* xp = x->val.ptr() + int64_t(cc) * m;
        double mu, var;
        if (training) {
            mu = 0;
            for (int64_t i = 0; i < m; ++i) mu += xp[i];
            mu /= double(m);
            var = 0;
            for (int64_t i = 0; i < m; ++i) var += (xp[i] - mu) * (xp[i] - mu);
            var /= double(m);
            if (update_running) {
                buf.mean[cc] = (1 - buf.momentum) * buf.mean[cc] + buf.momentum * mu;
                buf.var[cc] = (1 - buf.momentum) * buf.var[cc] + buf.momentum * var;
            }
        } else {
            mu = buf.mean[cc];
            var = buf.var[cc];
        }
        const double is = 1.0 / std::sqrt(var + buf.eps);
        (*mean)[cc] = mu;
        (*invstd)[cc] = is;
        double* xh = xhat->ptr() + int64_t(cc) * m;
        double* yp = y.ptr() + int64_t(cc) * m;
        const double g = gamma->val[cc], bb = beta->val[cc];
        for (int64_t i = 0; i < m; ++i) {
            xh[i] = (xp[i] - mu) * is;
            yp[i] = g * xh[i] + bb;
        }
    }

    Var xv = x, gv = gamma, bv = beta;
    return make_op(std::move(y), {x, gamma, beta}, [=](Node& self) {
        if (gv->requires_grad) gv->ensure_grad();
        if (bv->requires_grad) bv->ensure_grad();
        if (xv->requires_grad) xv->ensure_grad();
        for (int cc = 0; cc < c; ++cc) {
            const double* gy = self.grad.ptr() + int64_t(cc) * m;
            const double* xh = xhat->ptr() + int64_t(cc) * m;
            double sg = 0, sgx = 0;
            for (int64_t i = 0; i < m; ++i) {
                sg += gy[i];
                sgx += gy[i] * xh[i];
            }
            if (gv->requires_grad) gv->grad[cc] += sgx;
            if (bv->requires_grad) bv->grad[cc] += sg;
            if (!xv->requires_grad) continue;
            const double g = gv->val[cc], is = (*invstd)[cc];
            double* gx = xv->grad.ptr() + int64_t(cc) * m;
            if (training) {
                const double inv_m = 1.0 / double(m);
                for (int64_t i = 0; i < m; ++i)
                    gx[i] += g * is * (gy[i] - sg * inv_m - xh[i] * sgx * inv_m);
            } else {
                for (int64_t i = 0; i < m; ++i) gx[i] += g * is * gy[i];
            }
        }
    });
}

Var masked_mean(const Var& x, const Mask& region) {
    check(x->val.ndim() == 3, "masked_mean: rank");
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    check(region.h == h && region.w == w, "masked_mean: mask size mismatch");
    auto idx = std::make_shared<std::vector<int64_t>>();
    for (int64_t p = 0; p < int64_t(h) * w; ++p)
        if (region.v[size_t(p)]) idx->push_back(p);
    if (idx->empty()) throw ValidationError("empty pooling region");

    const double inv_n = 1.0 / double(idx->size());
    Tensor y({c});
    for (int cc = 0; cc < c; ++cc) {
        const double* xp = x->val.ptr() + int64_t(cc) * h * w;
        double acc = 0;
        for (int64_t p : *idx) acc += xp[p];
        y[cc] = acc * inv_n;
    }
    Var xv = x;
    return make_op(std::move(y), {x}, [=](Node& self) {
        if (!xv->requires_grad) return;
        xv->ensure_grad();
        for (int cc = 0; cc < c; ++cc) {
            double g = self.grad[cc] * inv_n;
            double* gx = xv->grad.ptr() + int64_t(cc) * h * w;
            for (int64_t p : *idx) gx[p] += g;
        }
    });
}

namespace {

// shared backward math for cosine distance of f against q given saved
// dots/fnorms/qnorm; adds into gf (layout [c,hw]) and gq
void cosine_bwd_accumulate(const double* f, int c, int64_t hw, const double* q,
                           const double* dots, const double* fnorms, double qn,
                           const double* gd, double* gf, double* gq) {
    if (qn < 1e-15) return;
    if (gf) {
#pragma omp parallel for schedule(static)
        for (int64_t p = 0; p < hw; ++p) {
            double nf = fnorms[p];
            if (nf * qn < 1e-30 || gd[p] == 0.0) continue;
            double inv = 1.0 / (nf * qn);
            double t = dots[p] / (nf * nf * nf * qn);
            for (int j = 0; j < c; ++j)
                gf[size_t(j) * hw + p] += gd[p] * (-q[j] * inv + f[size_t(j) * hw + p] * t);
        }
    }
    if (gq) {
        for (int64_t p = 0; p < hw; ++p) {
            double nf = fnorms[p];
            if (nf * qn < 1e-30 || gd[p] == 0.0) continue;
            double inv = 1.0 / (nf * qn);
            double t = dots[p] / (nf * qn * qn * qn);
            for (int j = 0; j < c; ++j)
                gq[j] += gd[p] * (-f[size_t(j) * hw + p] * inv + q[j] * t);
        }
    }
}

}  // namespace

Var cosine_distance_map(const Var& x, const Var& q) {
    check(x->val.ndim() == 3, "cosine_map: rank");
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    check(q->val.size() == c, "cosine_map: prototype length mismatch");
    const int64_t hw = int64_t(h) * w;

    Tensor d({h, w});
    auto dots = std::make_shared<Tensor>(std::vector<int>{h, w});
    auto fnorms = std::make_shared<Tensor>(std::vector<int>{h, w});
    kernels::cosine_map_fwd(x->val.ptr(), c, hw, q->val.ptr(), d.ptr(), dots->ptr(),
                            fnorms->ptr());
    double qn = 0;
    for (int j = 0; j < c; ++j) qn += q->val[j] * q->val[j];
    qn = std::sqrt(qn);

    Var xv = x, qv = q;
    return make_op(std::move(d), {x, q}, [=](Node& self) {
        double* gf = nullptr;
        double* gq = nullptr;
        if (xv->requires_grad) {
            xv->ensure_grad();
            gf = xv->grad.ptr();
        }
        if (qv->requires_grad) {
            qv->ensure_grad();
            gq = qv->grad.ptr();
        }
        cosine_bwd_accumulate(xv->val.ptr(), c, hw, qv->val.ptr(), dots->ptr(), fnorms->ptr(),
                              qn, self.grad.ptr(), gf, gq);
    });
}

Var sqeuclidean_distance_map(const Var& x, const Var& q) {
    check(x->val.ndim() == 3, "sqdist_map: rank");
    const int c = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
    check(q->val.size() == c, "sqdist_map: prototype length mismatch");
    const int64_t hw = int64_t(h) * w;
    Tensor d({h, w});
    for (int64_t p = 0; p < hw; ++p) {
        double acc = 0;
        for (int j = 0; j < c; ++j) {
            double e = x->val[size_t(j) * hw + p] - q->val[j];
            acc += e * e;
        }
        d[p] = acc;
    }
    Var xv = x, qv = q;
    return make_op(std::move(d), {x, q}, [=](Node& self) {
        if (xv->requires_grad) xv->ensure_grad();
        if (qv->requires_grad) qv->ensure_grad();
        for (int64_t p = 0; p < hw; ++p) {
            double g = self.grad[p];
            if (g == 0.0) continue;
            for (int j = 0; j < c; ++j) {
                double e = xv->val[size_t(j) * hw + p] - qv->val[j];
                if (xv->requires_grad) xv->grad[size_t(j) * hw + p] += 2.0 * g * e;
                if (qv->requires_grad) qv->grad[j] -= 2.0 * g * e;
            }
        }
    });
}

Var cosine_distance_vec(const Var& u, const Var& v) {
    check(u->val.size() == v->val.size(), "cosine_vec: length mismatch");
    const int c = int(u->val.size());
    double dot = 0, nu = 0, nv = 0;
    for (int j = 0; j < c; ++j) {
        dot += u->val[j] * v->val[j];
        nu += u->val[j] * u->val[j];
        nv += v->val[j] * v->val[j];
    }
    nu = std::sqrt(nu);
    nv = std::sqrt(nv);
    double den = nu * nv;
    Tensor d({1});
    d[0] = den < 1e-30 ? 1.0 : 1.0 - dot / den;

    Var uv = u, vv = v;
    return make_op(std::move(d), {u, v}, [=](Node& self) {
        if (den < 1e-30) return;
        double g = self.grad[0];
        for (int j = 0; j < c; ++j) {
            if (uv->requires_grad) {
                uv->ensure_grad();
                uv->grad[j] += g * (-vv->val[j] / den + dot * uv->val[j] / (nu * nu * den));
            }
            if (vv->requires_grad) {
                vv->ensure_grad();
                vv->grad[j] += g * (-uv->val[j] / den + dot * vv->val[j] / (nv * nv * den));
            }
        }
    });
}

Var two_class_softmax(const Var& d_fg, const Var& d_bg, double scale) {
    check(d_fg->val.same_shape(d_bg->val), "two_class_softmax: shape mismatch");
    Tensor p(d_fg->val.shape);
    for (int64_t i = 0; i < p.size(); ++i) {
        double z = scale * (d_bg->val[i] - d_fg->val[i]);
        p[i] = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }
    auto pv = std::make_shared<Tensor>(p);
    Var fv = d_fg, bv = d_bg;
    return make_op(std::move(p), {d_fg, d_bg}, [=](Node& self) {
        for (int64_t i = 0; i < self.grad.size(); ++i) {
            double s = self.grad[i] * scale * (*pv)[i] * (1.0 - (*pv)[i]);
            if (fv->requires_grad) {
                fv->ensure_grad();
                fv->grad[i] -= s;
            }
            if (bv->requires_grad) {
                bv->ensure_grad();
                bv->grad[i] += s;
            }
        }
    });
}

Var softmax_weights(const Var& d, double scale) {
    const int n = int(d->val.size());
    check(n >= 1, "softmax_weights: empty input");
    double mx = -1e300;
    for (int i = 0; i < n; ++i) mx = std::max(mx, scale * d->val[i]);
    Tensor w({n});
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        w[i] = std::exp(scale * d->val[i] - mx);
        sum += w[i];
    }
    for (int i = 0; i < n; ++i) w[i] /= sum;
    auto wv = std::make_shared<Tensor>(w);
    Var dv = d;
    return make_op(std::move(w), {d}, [=](Node& self) {
        if (!dv->requires_grad) return;
        dv->ensure_grad();
        double dotgw = 0;
        for (int i = 0; i < n; ++i) dotgw += self.grad[i] * (*wv)[i];
        for (int i = 0; i < n; ++i)
            dv->grad[i] += scale * (*wv)[i] * (self.grad[i] - dotgw);
    });
}

Var stack_rows(const std::vector<Var>& rows) {
    check(!rows.empty(), "stack_rows: empty");
    const int c = int(rows[0]->val.size());
    const int n = int(rows.size());
    Tensor y({n, c});
    for (int i = 0; i < n; ++i) {
        check(int(rows[i]->val.size()) == c, "stack_rows: ragged rows");
        std::copy(rows[i]->val.data.begin(), rows[i]->val.data.end(),
                  y.data.begin() + int64_t(i) * c);
    }
    auto rs = std::make_shared<std::vector<Var>>(rows);
    return make_op(std::move(y), rows, [=](Node& self) {
        for (int i = 0; i < n; ++i) {
            auto& r = (*rs)[size_t(i)];
            if (!r->requires_grad) continue;
            r->ensure_grad();
            for (int j = 0; j < c; ++j) r->grad[j] += self.grad[int64_t(i) * c + j];
        }
    });
}

Var weighted_sum_rows(const Var& rows, const Var& w) {
    check(rows->val.ndim() == 2, "weighted_sum_rows: rank");
    const int n = rows->val.dim(0), c = rows->val.dim(1);
    check(int(w->val.size()) == n, "weighted_sum_rows: weight length mismatch");
    Tensor y({c});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) y[j] += w->val[i] * rows->val[int64_t(i) * c + j];
    Var rv = rows, wv = w;
    return make_op(std::move(y), {rows, w}, [=](Node& self) {
        for (int i = 0; i < n; ++i) {
            if (rv->requires_grad) {
                rv->ensure_grad();
                for (int j = 0; j < c; ++j)
                    rv->grad[int64_t(i) * c + j] += wv->val[i] * self.grad[j];
            }
            if (wv->requires_grad) {
                wv->ensure_grad();
                double acc = 0;
                for (int j = 0; j < c; ++j) acc += rv->val[int64_t(i) * c + j] * self.grad[j];
                wv->grad[i] += acc;
            }
        }
    });
}

Var sigmoid(const Var& x) {
    Tensor y(x->val.shape);
    for (int64_t i = 0; i < y.size(); ++i) {
        double z = x->val[i];
        y[i] = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }
    auto yv = std::make_shared<Tensor>(y);
    Var xv = x;
    return make_op(std::move(y), {x}, [=](Node& self) {
        if (!xv->requires_grad) return;
        xv->ensure_grad();
        for (int64_t i = 0; i < self.grad.size(); ++i)
            xv->grad[i] += self.grad[i] * (*yv)[i] * (1.0 - (*yv)[i]);
    });
}

Var dice_bce_loss(const Var& prob, const Mask& gt) {
    check(prob->val.ndim() == 2, "dice_bce: rank");
    const int h = prob->val.dim(0), w = prob->val.dim(1);
    check(gt.h == h && gt.w == w, "dice_bce: mask size mismatch");
    const int64_t m = int64_t(h) * w;
    constexpr double kEps = 1.0;     // dice smoothing
    constexpr double kClamp = 1e-7;  // bce probability clamp

    double inter = 0, sp = 0, sg = 0, bce = 0;
    for (int64_t i = 0; i < m; ++i) {
        double p = prob->val[i];
        double g = gt.v[size_t(i)] ? 1.0 : 0.0;
        inter += p * g;
        sp += p;
        sg += g;
        double pc = std::clamp(p, kClamp, 1.0 - kClamp);
        bce -= g * std::log(pc) + (1.0 - g) * std::log(1.0 - pc);
    }
    const double denom = sp + sg + kEps;
    Tensor loss({1});
    loss[0] = (1.0 - (2.0 * inter + kEps) / denom) + bce / double(m);

    Var pv = prob;
    return make_op(std::move(loss), {prob}, [=](Node& self) {
        if (!pv->requires_grad) return;
        pv->ensure_grad();
        const double gl = self.grad[0];
        const double inv_m = 1.0 / double(m);
        const double d2 = denom * denom;
        for (int64_t i = 0; i < m; ++i) {
            double p = pv->val[i];
            double g = gt.v[size_t(i)] ? 1.0 : 0.0;
            double ddice = -(2.0 * g * denom - (2.0 * inter + kEps)) / d2;
            double dbce = 0.0;
            if (p > kClamp && p < 1.0 - kClamp)
                dbce = (-g / p + (1.0 - g) / (1.0 - p)) * inv_m;
            pv->grad[i] += gl * (ddice + dbce);
        }
    });
}

}  // namespace ops
}  // namespace lesref::nn
