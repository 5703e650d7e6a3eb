#include "lesref/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "lesref/common.hpp"
#include "lesref/nn/kernels.hpp"

namespace lesref::sp {

Mask SuperpixelLabeling::region(int label) const {
    Mask m(h, w);
    for (int64_t i = 0; i < int64_t(h) * w; ++i) m.v[size_t(i)] = labels[size_t(i)] == label;
    return m;
}

double auto_compactness(const nn::Tensor& features, const Mask& mask) {
    const int c = features.dim(0);
    const int64_t hw = int64_t(features.dim(1)) * features.dim(2);
    double acc = 0;
    int64_t n = 0;
    for (int64_t p = 0; p < hw; ++p) {
        if (!mask.v[size_t(p)]) continue;
        double s = 0;
        for (int j = 0; j < c; ++j) {
            double v = features[size_t(j) * hw + p];
            s += v * v;
        }
        acc += std::sqrt(s);
        ++n;
    }
    return std::max(n ? 0.1 * acc / double(n) : 0.0, 1e-6);
}

namespace {

// in-mask distance to the mask boundary; image border counts as background
std::vector<double> boundary_distance(const Mask& mask) {
    const int h = mask.h, w = mask.w;
    std::vector<uint8_t> site((h + 2) * (w + 2), 1);  // padded ring = background
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            site[size_t(y + 1) * (w + 2) + x + 1] = mask.at(y, x) ? 0 : 1;
    std::vector<double> sq((h + 2) * (w + 2));
    nn::kernels::edt_sq(site.data(), h + 2, w + 2, sq.data());
    std::vector<double> out(size_t(h) * w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out[size_t(y) * w + x] = std::sqrt(sq[size_t(y + 1) * (w + 2) + x + 1]);
    return out;
}

}  // namespace

SuperpixelLabeling mask_slic(const nn::Tensor& features, const Mask& mask, int n_sp,
                             double compactness, int max_iters) {
    if (features.ndim() != 3 || features.dim(1) != mask.h || features.dim(2) != mask.w)
        throw ValidationError("mask_slic: features and mask sizes differ");
    if (n_sp < 1) throw ValidationError("mask_slic: n_sp must be >= 1");
    if (mask.empty_fg()) throw ValidationError("mask_slic: empty mask");

    const int c = features.dim(0), h = mask.h, w = mask.w;
    const int64_t hw = int64_t(h) * w;

    std::vector<int64_t> pix;  // masked pixels, raster order
    for (int64_t p = 0; p < hw; ++p)
        if (mask.v[size_t(p)]) pix.push_back(p);
    const int n = int(pix.size());
    const int k = std::min(n_sp, n);

    SuperpixelLabeling out;
    out.h = h;
    out.w = w;
    out.n_eff = k;
    out.labels.assign(size_t(hw), -1);

    if (k == n) {  // one superpixel per pixel
        for (int i = 0; i < n; ++i) out.labels[size_t(pix[i])] = i;
        return out;
    }

    // gather features/coords of masked pixels
    std::vector<double> feat(size_t(n) * c), xy(size_t(n) * 2);
    for (int i = 0; i < n; ++i) {
        int64_t p = pix[i];
        for (int j = 0; j < c; ++j) feat[size_t(i) * c + j] = features[size_t(j) * hw + p];
        xy[size_t(i) * 2] = double(p / w);
        xy[size_t(i) * 2 + 1] = double(p % w);
    }

    // seed placement: farthest from boundary, then farthest from prior seeds
    auto bd = boundary_distance(mask);
    std::vector<double> seed_dist(n, 1e300);
    std::vector<int> seeds;
    for (int s = 0; s < k; ++s) {
        int best = -1;
        double bestv = -1;
        for (int i = 0; i < n; ++i) {
            double v = std::min(bd[size_t(pix[i])], seed_dist[i]);
            if (v > bestv) {
                bestv = v;
                best = i;
            }
        }
        seeds.push_back(best);
        for (int i = 0; i < n; ++i) {
            double dy = xy[size_t(i) * 2] - xy[size_t(best) * 2];
            double dx = xy[size_t(i) * 2 + 1] - xy[size_t(best) * 2 + 1];
            seed_dist[i] = std::min(seed_dist[i], std::hypot(dy, dx));
        }
    }

    const double m = compactness < 0 ? auto_compactness(features, mask) : compactness;
    const double s_norm = std::sqrt(double(n) / double(k));
    const double m_over_s = m / s_norm;

    std::vector<double> cent(size_t(k) * (c + 2));
    for (int q = 0; q < k; ++q) {
        int i = seeds[q];
        std::copy(feat.begin() + size_t(i) * c, feat.begin() + size_t(i + 1) * c,
                  cent.begin() + size_t(q) * (c + 2));
        cent[size_t(q) * (c + 2) + c] = xy[size_t(i) * 2];
        cent[size_t(q) * (c + 2) + c + 1] = xy[size_t(i) * 2 + 1];
    }

    std::vector<int> labels(n), prev(n);
    std::vector<double> costs(n);
    std::vector<int> sizes(k);

    auto pixel_cost = [&](int i, int q) {
        double df = 0;
        for (int j = 0; j < c; ++j) {
            double e = feat[size_t(i) * c + j] - cent[size_t(q) * (c + 2) + j];
            df += e * e;
        }
        double dy = xy[size_t(i) * 2] - cent[size_t(q) * (c + 2) + c];
        double dx = xy[size_t(i) * 2 + 1] - cent[size_t(q) * (c + 2) + c + 1];
        return std::sqrt(df) + m_over_s * std::hypot(dy, dx);
    };

    auto assign_pass = [&]() {
        nn::kernels::slic_assign(feat.data(), xy.data(), n, c, cent.data(), k, m_over_s,
                                 labels.data(), costs.data());
        std::fill(sizes.begin(), sizes.end(), 0);
        for (int i = 0; i < n; ++i) ++sizes[size_t(labels[i])];
        // keep every cluster populated: hand the costliest pixel of a
        // multi-pixel cluster to each empty one
        for (int q = 0; q < k; ++q) {
            if (sizes[size_t(q)] > 0) continue;
            int best = -1;
            double bestc = -1;
            for (int i = 0; i < n; ++i) {
                if (sizes[size_t(labels[i])] < 2) continue;
                if (costs[size_t(i)] > bestc) {
                    bestc = costs[size_t(i)];
                    best = i;
                }
            }
            --sizes[size_t(labels[best])];
            labels[size_t(best)] = q;
            ++sizes[size_t(q)];
            costs[size_t(best)] = pixel_cost(best, q);
        }
        double total = 0;
        for (int i = 0; i < n; ++i) total += costs[size_t(i)];
        return total;
    };

    auto update_centroids = [&]() {
        std::fill(cent.begin(), cent.end(), 0.0);
        std::vector<int> cnt(k, 0);
        for (int i = 0; i < n; ++i) {
            int q = labels[size_t(i)];
            ++cnt[size_t(q)];
            for (int j = 0; j < c; ++j) cent[size_t(q) * (c + 2) + j] += feat[size_t(i) * c + j];
            cent[size_t(q) * (c + 2) + c] += xy[size_t(i) * 2];
            cent[size_t(q) * (c + 2) + c + 1] += xy[size_t(i) * 2 + 1];
        }
        for (int q = 0; q < k; ++q)
            for (int j = 0; j < c + 2; ++j) cent[size_t(q) * (c + 2) + j] /= double(cnt[size_t(q)]);
    };

    double total = assign_pass();
    out.cost_history.push_back(total);
    out.iterations = 1;
    for (int it = 1; it < max_iters; ++it) {
        prev = labels;
        double prev_total = total;
        update_centroids();
        total = assign_pass();
        ++out.iterations;
        if (total > prev_total) {  // revert: keep the cost trace non-increasing
            labels = prev;
            total = prev_total;
            break;
        }
        out.cost_history.push_back(total);
        if (labels == prev) break;
    }

    for (int i = 0; i < n; ++i) out.labels[size_t(pix[i])] = labels[size_t(i)];

    // merge small orphaned fragments into the nearest adjacent label
    const double frag_thresh = double(n) / (4.0 * k);
    std::vector<int32_t> frag_id(size_t(hw), -1);
    struct Frag {
        int label;
        std::vector<int64_t> pts;
    };
    std::vector<Frag> frags;
    for (int64_t p0 : pix) {
        if (frag_id[size_t(p0)] >= 0) continue;
        int32_t fid = int32_t(frags.size());
        Frag f;
        f.label = out.labels[size_t(p0)];
        std::deque<int64_t> qd{p0};
        frag_id[size_t(p0)] = fid;
        while (!qd.empty()) {
            int64_t p = qd.front();
            qd.pop_front();
            f.pts.push_back(p);
            int y = int(p / w), x = int(p % w);
            const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
            for (int d = 0; d < 4; ++d) {
                int ny = y + dy[d], nx = x + dx[d];
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                int64_t np = int64_t(ny) * w + nx;
                if (out.labels[size_t(np)] != f.label || frag_id[size_t(np)] >= 0) continue;
                frag_id[size_t(np)] = fid;
                qd.push_back(np);
            }
        }
        frags.push_back(std::move(f));
    }
    std::vector<int> main_frag(k, -1);  // largest fragment per label is kept
    for (size_t fi = 0; fi < frags.size(); ++fi) {
        int l = frags[fi].label;
        if (main_frag[size_t(l)] < 0 ||
            frags[fi].pts.size() > frags[size_t(main_frag[size_t(l)])].pts.size())
            main_frag[size_t(l)] = int(fi);
    }
    std::vector<double> label_cy(k, 0), label_cx(k, 0);
    std::vector<int> label_n(k, 0);
    for (int64_t p : pix) {
        int l = out.labels[size_t(p)];
        label_cy[size_t(l)] += double(p / w);
        label_cx[size_t(l)] += double(p % w);
        ++label_n[size_t(l)];
    }
    for (int q = 0; q < k; ++q) {
        label_cy[size_t(q)] /= double(label_n[size_t(q)]);
        label_cx[size_t(q)] /= double(label_n[size_t(q)]);
    }
    for (size_t fi = 0; fi < frags.size(); ++fi) {
        const Frag& f = frags[fi];
        if (int(fi) == main_frag[size_t(f.label)] || double(f.pts.size()) >= frag_thresh)
            continue;
        // adjacent labels of this fragment
        std::vector<char> adj(k, 0);
        double fcy = 0, fcx = 0;
        for (int64_t p : f.pts) {
            fcy += double(p / w);
            fcx += double(p % w);
            int y = int(p / w), x = int(p % w);
            const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
            for (int d = 0; d < 4; ++d) {
                int ny = y + dy[d], nx = x + dx[d];
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                int32_t l = out.labels[size_t(int64_t(ny) * w + nx)];
                if (l >= 0 && l != f.label) adj[size_t(l)] = 1;
            }
        }
        fcy /= double(f.pts.size());
        fcx /= double(f.pts.size());
        int target = -1;
        double bestd = 1e300;
        for (int q = 0; q < k; ++q) {
            if (!adj[size_t(q)]) continue;
            double d = std::hypot(label_cy[size_t(q)] - fcy, label_cx[size_t(q)] - fcx);
            if (d < bestd) {
                bestd = d;
                target = q;
            }
        }
        if (target < 0) continue;  // isolated island, leave as-is
        for (int64_t p : f.pts) out.labels[size_t(p)] = target;
    }

    return out;
}

}  // namespace lesref::sp
