#include "lesref/coarse_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "lesref/common.hpp"

namespace lesref::sim {

void SimConfig::validate() const {
    if (smooth_radius < 0 || dilate_radius < 0)
        throw ValidationError("sim config: radii must be >= 0");
    if (expansion < 1.0) throw ValidationError("sim config: expansion must be >= 1.0");
    if (reduction_factor < 1.0)
        throw ValidationError("sim config: reduction factor must be >= 1.0");
    if (min_points < 1) throw ValidationError("sim config: min_points must be >= 1");
}

bool EllipseParams::contains(double x, double y, double tol) const {
    double ct = std::cos(theta), st = std::sin(theta);
    double dx = x - cx, dy = y - cy;
    double u = ct * dx + st * dy;
    double v = -st * dx + ct * dy;
    double ra = u / a, rb = v / b;
    return ra * ra + rb * rb <= 1.0 + tol;
}

std::vector<PixelSet> connected_components(const Mask& mask) {
    std::vector<int32_t> label(size_t(mask.h) * mask.w, -1);
    std::vector<PixelSet> comps;
    std::deque<PointI> queue;
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) {
            if (!mask.at(y, x) || label[size_t(y) * mask.w + x] >= 0) continue;
            int id = int(comps.size());
            comps.emplace_back();
            label[size_t(y) * mask.w + x] = id;
            queue.push_back({y, x});
            while (!queue.empty()) {
                PointI p = queue.front();
                queue.pop_front();
                comps[id].push_back(p);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dy && !dx) continue;
                        int ny = p.y + dy, nx = p.x + dx;
                        if (!mask.in_bounds(ny, nx) || !mask.at(ny, nx)) continue;
                        int32_t& l = label[size_t(ny) * mask.w + nx];
                        if (l < 0) {
                            l = id;
                            queue.push_back({ny, nx});
                        }
                    }
            }
        }
    }
    for (auto& c : comps)
        std::sort(c.begin(), c.end(),
                  [](const PointI& a, const PointI& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    std::sort(comps.begin(), comps.end(), [](const PixelSet& a, const PixelSet& b) {
        int ay = a.front().y, by = b.front().y;
        int ax = std::min_element(a.begin(), a.end(), [](auto& p, auto& q) { return p.x < q.x; })->x;
        int bx = std::min_element(b.begin(), b.end(), [](auto& p, auto& q) { return p.x < q.x; })->x;
        return ay != by ? ay < by : ax < bx;
    });
    return comps;
}

namespace {

struct Centroid {
    double y = 0, x = 0;
};

Centroid centroid_of(const PixelSet& s) {
    Centroid c;
    for (const auto& p : s) {
        c.y += p.y;
        c.x += p.x;
    }
    c.y /= double(s.size());
    c.x /= double(s.size());
    return c;
}

double cdist(const Centroid& a, const Centroid& b) {
    return std::hypot(a.y - b.y, a.x - b.x);
}

}  // namespace

std::vector<int> dbscan_components(const std::vector<PixelSet>& components,
                                   double eps, int min_points) {
    const int n = int(components.size());
    std::vector<Centroid> cent(n);
    for (int i = 0; i < n; ++i) cent[i] = centroid_of(components[i]);

    auto neighbours = [&](int i) {
        std::vector<int> out;
        for (int j = 0; j < n; ++j)
            if (cdist(cent[i], cent[j]) <= eps) out.push_back(j);
        return out;
    };

    constexpr int kUnvisited = -2, kNoise = -1;
    std::vector<int> label(n, kUnvisited);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (label[i] != kUnvisited) continue;
        auto nb = neighbours(i);
        if (int(nb.size()) < min_points) {
            label[i] = kNoise;
            continue;
        }
        int cid = next++;
        label[i] = cid;
        std::deque<int> seeds(nb.begin(), nb.end());
        while (!seeds.empty()) {
            int j = seeds.front();
            seeds.pop_front();
            if (label[j] == kNoise) label[j] = cid;  // border point
            if (label[j] != kUnvisited) continue;
            label[j] = cid;
            auto nb2 = neighbours(j);
            if (int(nb2.size()) >= min_points)
                seeds.insert(seeds.end(), nb2.begin(), nb2.end());
        }
    }
    for (int i = 0; i < n; ++i)
        if (label[i] == kNoise) label[i] = next++;  // every component stays covered

    // dense relabel by order of first appearance
    std::vector<int> remap(next, -1);
    int dense = 0;
    for (int i = 0; i < n; ++i)
        if (remap[label[i]] < 0) remap[label[i]] = dense++;
    for (int i = 0; i < n; ++i) label[i] = remap[label[i]];
    return label;
}

int target_cluster_count(int n_components, double reduction_factor) {
    if (n_components <= 0) return 0;
    return std::max(1, int(std::lround(double(n_components) / reduction_factor)));
}

namespace {

int cluster_count(const std::vector<int>& labels) {
    int m = -1;
    for (int l : labels) m = std::max(m, l);
    return m + 1;
}

}  // namespace

EpsCalibration calibrate_eps(const std::vector<PixelSet>& components,
                             int target, int min_points) {
    if (target < 1) throw ValidationError("calibrate_eps: target must be >= 1");
    const int n = int(components.size());
    std::vector<Centroid> cent(n);
    for (int i = 0; i < n; ++i) cent[i] = centroid_of(components[i]);

    std::set<double> cand{0.0};
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) cand.insert(cdist(cent[i], cent[j]));
    std::vector<double> c(cand.begin(), cand.end());

    auto count_at = [&](double eps) {
        return cluster_count(dbscan_components(components, eps, min_points));
    };

    // cluster count is non-increasing in eps for min_points = 1, so a discrete
    // bisection over the candidate distances finds the largest eps with the
    // target count
    int lo = 0, hi = int(c.size()) - 1;
    while (lo < hi) {
        int mid = (lo + hi + 1) / 2;
        if (count_at(c[mid]) >= target)
            lo = mid;
        else
            hi = mid - 1;
    }
    int got = count_at(c[lo]);
    if (got == target) return {c[lo], got, true};

    // exhaustive fallback: closest achievable count, ties toward larger eps
    EpsCalibration best{c[0], count_at(c[0]), false};
    for (size_t i = 1; i < c.size(); ++i) {
        int cnt = count_at(c[i]);
        if (std::abs(cnt - target) <= std::abs(best.achieved - target)) {
            best.eps = c[i];
            best.achieved = cnt;
        }
    }
    best.exact = best.achieved == target;
    return best;
}

EllipseParams fit_enclosing_ellipse(const PixelSet& points, double expansion) {
    if (points.empty()) throw ValidationError("fit_enclosing_ellipse: empty point set");
    const double n = double(points.size());
    double my = 0, mx = 0;
    for (const auto& p : points) {
        my += p.y;
        mx += p.x;
    }
    my /= n;
    mx /= n;
    double syy = 0, sxx = 0, sxy = 0;
    for (const auto& p : points) {
        double dy = p.y - my, dx = p.x - mx;
        syy += dy * dy;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    syy /= n;
    sxx /= n;
    sxy /= n;

    double tr = sxx + syy;
    double disc = std::sqrt(std::max(0.0, 0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy));
    double l1 = 0.5 * tr + disc;  // major
    double l2 = std::max(0.0, 0.5 * tr - disc);
    double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);

    double a0 = std::max(2.0 * std::sqrt(l1), 1e-9);
    double b0 = std::max(2.0 * std::sqrt(l2), 1e-9);
    bool degenerate = points.size() < 3 || 2.0 * std::sqrt(l2) < 1e-6;

    double ct = std::cos(theta), st = std::sin(theta);
    double s = 0.0;
    for (const auto& p : points) {
        double dx = p.x - mx, dy = p.y - my;
        double u = (ct * dx + st * dy) / a0;
        double v = (-st * dx + ct * dy) / b0;
        s = std::max(s, std::sqrt(u * u + v * v));
    }
    s *= 1.0 + 1e-12;  // keep boundary points strictly enclosed under roundoff

    EllipseParams e;
    e.cx = mx;
    e.cy = my;
    e.a = a0 * s * expansion;
    e.b = b0 * s * expansion;
    e.theta = theta;
    if (degenerate) e.b = std::max(e.b, 2.0);
    e.a = std::max(e.a, e.b);
    while (e.theta < 0) e.theta += M_PI;
    while (e.theta >= M_PI) e.theta -= M_PI;
    return e;
}

Mask rasterize_ellipses(const std::vector<EllipseParams>& es, int h, int w) {
    Mask out(h, w);
    for (const auto& e : es) {
        double ct = std::cos(e.theta), st = std::sin(e.theta);
        double ex = std::sqrt(e.a * e.a * ct * ct + e.b * e.b * st * st);
        double ey = std::sqrt(e.a * e.a * st * st + e.b * e.b * ct * ct);
        int x0 = std::max(0, int(std::floor(e.cx - ex)));
        int x1 = std::min(w - 1, int(std::ceil(e.cx + ex)));
        int y0 = std::max(0, int(std::floor(e.cy - ey)));
        int y1 = std::min(h - 1, int(std::ceil(e.cy + ey)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x)
                if (e.contains(x, y)) out.at(y, x) = 1;
    }
    return out;
}

CoarseMask simulate_coarse_mask(const Mask& fine_mask, const SimConfig& cfg) {
    cfg.validate();
    CoarseMask out;
    out.raster = Mask(fine_mask.h, fine_mask.w);
    if (fine_mask.empty_fg()) return out;

    Mask smoothed = close_disc(fine_mask, cfg.smooth_radius);
    Mask dilated = dilate_disc(smoothed, cfg.dilate_radius);

    auto comps = connected_components(dilated);
    int target = target_cluster_count(int(comps.size()), cfg.reduction_factor);
    auto cal = calibrate_eps(comps, target, cfg.min_points);
    auto labels = dbscan_components(comps, cal.eps, cfg.min_points);

    int k = cluster_count(labels);
    std::vector<PixelSet> merged(k);
    for (size_t i = 0; i < comps.size(); ++i)
        merged[labels[i]].insert(merged[labels[i]].end(), comps[i].begin(), comps[i].end());

    for (auto& cluster : merged)
        out.ellipses.push_back(fit_enclosing_ellipse(cluster, cfg.expansion));
    out.raster = rasterize_ellipses(out.ellipses, fine_mask.h, fine_mask.w);
    return out;
}

}  // namespace lesref::sim
