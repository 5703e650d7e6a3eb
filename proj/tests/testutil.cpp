#include "testutil.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>

#include <json.hpp>

namespace testutil {

Mask mask_from_art(const std::string& art) {
    std::vector<std::string> rows;
    std::string cur;
    for (char c : art) {
        if (c == '\n') {
            if (!cur.empty()) rows.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) rows.push_back(cur);
    Mask m(int(rows.size()), int(rows[0].size()));
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) m.at(y, x) = rows[size_t(y)][size_t(x)] == '1' ? 1 : 0;
    return m;
}

nn::Tensor random_tensor(const std::vector<int>& shape, std::mt19937_64& rng, double lo,
                         double hi) {
    nn::Tensor t(shape);
    std::uniform_real_distribution<double> d(lo, hi);
    for (auto& v : t.data) v = d(rng);
    return t;
}

Mask random_blob_mask(int h, int w, int n_blobs, std::mt19937_64& rng) {
    Mask m(h, w);
    const double rmax = std::max(1.6, std::min(h, w) / 6.0);
    std::uniform_real_distribution<double> ux(0, w - 1), uy(0, h - 1), ur(1.5, rmax);
    for (int i = 0; i < n_blobs; ++i) {
        double cx = ux(rng), cy = uy(rng), r = ur(rng);
        for (int y = std::max(0, int(cy - r - 1)); y <= std::min(h - 1, int(cy + r + 1)); ++y)
            for (int x = std::max(0, int(cx - r - 1)); x <= std::min(w - 1, int(cx + r + 1)); ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.at(y, x) = 1;
    }
    return m;
}

SynthImage make_synth_image(int h, int w, int lesions_min, int lesions_max,
                            std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    SynthImage out;
    out.image = ImageU16(h, w);
    out.fine = Mask(h, w);

    // low-frequency textured background around a per-image base tint
    double base[3] = {0.45 + 0.2 * uni(rng), 0.3 + 0.2 * uni(rng), 0.25 + 0.15 * uni(rng)};
    const int gh = 6, gw = 6;
    std::vector<double> grid(size_t(gh) * gw * 3);
    for (auto& v : grid) v = (uni(rng) - 0.5) * 0.16;
    auto grid_at = [&](int gy, int gx, int c) { return grid[(size_t(gy) * gw + gx) * 3 + c]; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gy = double(y) / (h - 1) * (gh - 1), gx = double(x) / (w - 1) * (gw - 1);
            int y0 = int(gy), x0 = int(gx);
            int y1 = std::min(y0 + 1, gh - 1), x1 = std::min(x0 + 1, gw - 1);
            double fy = gy - y0, fx = gx - x0;
            for (int c = 0; c < 3; ++c) {
                double a = grid_at(y0, x0, c) * (1 - fx) + grid_at(y0, x1, c) * fx;
                double b = grid_at(y1, x0, c) * (1 - fx) + grid_at(y1, x1, c) * fx;
                double v = base[c] + a * (1 - fy) + b * fy + (uni(rng) - 0.5) * 0.03;
                out.image.at(y, x, c) = uint16_t(std::lround(std::clamp(v, 0.0, 1.0) * 65535));
            }
        }

    // the annotated lesions: irregular disc unions sharing one tint per image
    int n = lesions_min + int(uni(rng) * (lesions_max - lesions_min + 1));
    n = std::min(n, lesions_max);
    double delta[3];
    for (int c = 0; c < 3; ++c)
        delta[c] = (uni(rng) < 0.5 ? -1.0 : 1.0) * (0.12 + 0.20 * uni(rng));
    for (int i = 0; i < n; ++i) {
        double cy = (0.12 + 0.76 * uni(rng)) * h, cx = (0.12 + 0.76 * uni(rng)) * w;
        int discs = 2 + int(uni(rng) * 3);
        for (int d = 0; d < discs; ++d) {
            double oy = cy + (uni(rng) - 0.5) * 10, ox = cx + (uni(rng) - 0.5) * 10;
            double r = 2.0 + uni(rng) * 4.0;
            for (int y = std::max(0, int(oy - r - 1)); y <= std::min(h - 1, int(oy + r + 1)); ++y)
                for (int x = std::max(0, int(ox - r - 1)); x <= std::min(w - 1, int(ox + r + 1));
                     ++x)
                    if ((x - ox) * (x - ox) + (y - oy) * (y - oy) <= r * r) out.fine.at(y, x) = 1;
        }
    }

    // a field of look-alike blobs with independent tints covers the rest of
    // the image: appearance alone never identifies the annotated class, only
    // the per-image tint consistency and the annotation do
    int nd = int(0.004 * h * w);
    for (int i = 0; i < nd && lesions_max > 0; ++i) {
        double cy = (0.05 + 0.9 * uni(rng)) * h, cx = (0.05 + 0.9 * uni(rng)) * w;
        double dd[3];
        for (int c = 0; c < 3; ++c)
            dd[c] = (uni(rng) < 0.5 ? -1.0 : 1.0) * (0.12 + 0.20 * uni(rng));
        int discs = 2 + int(uni(rng) * 3);
        for (int d = 0; d < discs; ++d) {
            double oy = cy + (uni(rng) - 0.5) * 10, ox = cx + (uni(rng) - 0.5) * 10;
            double r = 2.0 + uni(rng) * 4.0;
            for (int y = std::max(0, int(oy - r - 1)); y <= std::min(h - 1, int(oy + r + 1)); ++y)
                for (int x = std::max(0, int(ox - r - 1)); x <= std::min(w - 1, int(ox + r + 1));
                     ++x) {
                    if ((x - ox) * (x - ox) + (y - oy) * (y - oy) > r * r) continue;
                    if (out.fine.at(y, x)) continue;  // never recolour a lesion pixel
                    for (int c = 0; c < 3; ++c) {
                        double v = double(out.image.at(y, x, c)) / 65535.0 + dd[c];
                        out.image.at(y, x, c) =
                            uint16_t(std::lround(std::clamp(v, 0.0, 1.0) * 65535));
                    }
                }
        }
    }

    // lesion tint applied once per pixel
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!out.fine.at(y, x)) continue;
            for (int c = 0; c < 3; ++c) {
                double v = double(out.image.at(y, x, c)) / 65535.0 + delta[c];
                out.image.at(y, x, c) = uint16_t(std::lround(std::clamp(v, 0.0, 1.0) * 65535));
            }
        }
    return out;
}

data::PatchPair make_ellipse_pair(int patch_size, const std::string& id, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const int P = patch_size;
    auto bg = make_synth_image(P, P, 0, 0, rng);  // texture only

    data::PatchPair pair;
    pair.image = bg.image;
    pair.gt = Mask(P, P);
    pair.coarse = Mask(P, P);

    double cy = P / 2.0 - 6 + 12 * uni(rng), cx = P / 2.0 - 6 + 12 * uni(rng);
    double a = P * (0.27 + 0.08 * uni(rng));
    double b = a * (0.7 + 0.3 * uni(rng));
    double th = M_PI * uni(rng);
    double loose = 1.15 + 0.15 * uni(rng);
    double ct = std::cos(th), st = std::sin(th);
    for (int y = 0; y < P; ++y)
        for (int x = 0; x < P; ++x) {
            double dy = y - cy, dx = x - cx;
            double u = ct * dx + st * dy, v = -st * dx + ct * dy;
            double q = u * u / (a * a) + v * v / (b * b);
            if (q <= 1.0) pair.gt.at(y, x) = 1;
            if (q <= loose * loose) pair.coarse.at(y, x) = 1;
        }

    double delta[3];
    for (int c = 0; c < 3; ++c)
        delta[c] = (uni(rng) < 0.5 ? -1.0 : 1.0) * (0.12 + 0.20 * uni(rng));
    for (int y = 0; y < P; ++y)
        for (int x = 0; x < P; ++x) {
            if (!pair.gt.at(y, x)) continue;
            for (int c = 0; c < 3; ++c) {
                double v = double(pair.image.at(y, x, c)) / 65535.0 + delta[c];
                pair.image.at(y, x, c) =
                    uint16_t(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
            }
        }
    pair.placement = {id, id, "LES", {0, 0, P, P}, P, P, P};
    return pair;
}

std::vector<data::PatchPair> extract_synth_patches(const std::vector<SynthImage>& images,
                                                   double reduction_factor, int patch_size,
                                                   const std::string& lesion_class) {
    std::vector<data::PatchPair> pairs;
    sim::SimConfig sc;
    sc.reduction_factor = reduction_factor;
    for (size_t i = 0; i < images.size(); ++i) {
        if (images[i].fine.empty_fg()) continue;
        auto cm = sim::simulate_coarse_mask(images[i].fine, sc);
        auto ps = data::extract_patch_pairs(images[i].image, images[i].fine, cm,
                                            "img" + std::to_string(i), lesion_class, patch_size,
                                            0.2);
        for (auto& p : ps) pairs.push_back(std::move(p));
    }
    return pairs;
}

std::filesystem::path write_synth_dataset(const std::filesystem::path& dir, int n_images, int h,
                                          int w, uint64_t seed, bool two_classes) {
    std::mt19937_64 rng(seed);
    std::filesystem::create_directories(dir / "images");
    std::filesystem::create_directories(dir / "masks");
    nlohmann::json images = nlohmann::json::array();
    std::vector<std::string> classes = two_classes ? std::vector<std::string>{"LES", "SPOT"}
                                                   : std::vector<std::string>{"LES"};
    for (int i = 0; i < n_images; ++i) {
        auto s = make_synth_image(h, w, 2, 5, rng);
        std::string id = "img" + std::to_string(i);
        save_image_png16(s.image, dir / "images" / (id + ".png"));
        nlohmann::json masks;
        save_mask_png(s.fine, dir / "masks" / (id + "_LES.png"));
        masks["LES"] = "masks/" + id + "_LES.png";
        if (two_classes) {
            auto s2 = make_synth_image(h, w, 1, 2, rng);
            save_mask_png(s2.fine, dir / "masks" / (id + "_SPOT.png"));
            masks["SPOT"] = "masks/" + id + "_SPOT.png";
        }
        images.push_back(nlohmann::json{
            {"id", id}, {"image", "images/" + id + ".png"}, {"masks", masks}});
    }
    nlohmann::json manifest{{"root", "."},
                            {"split", "train"},
                            {"classes", classes},
                            {"images", images}};
    auto path = dir / "manifest.json";
    std::ofstream f(path, std::ios::trunc);
    f << manifest.dump(2) << "\n";
    return path;
}

std::filesystem::path write_image_set(const std::filesystem::path& dir,
                                      const std::vector<SynthImage>& images) {
    std::filesystem::create_directories(dir / "images");
    std::filesystem::create_directories(dir / "masks");
    nlohmann::json recs = nlohmann::json::array();
    for (size_t i = 0; i < images.size(); ++i) {
        std::string id = "img" + std::to_string(i);
        save_image_png16(images[i].image, dir / "images" / (id + ".png"));
        save_mask_png(images[i].fine, dir / "masks" / (id + "_LES.png"));
        recs.push_back(nlohmann::json{{"id", id},
                                      {"image", "images/" + id + ".png"},
                                      {"masks", {{"LES", "masks/" + id + "_LES.png"}}}});
    }
    nlohmann::json manifest{{"root", "."},
                            {"split", "test"},
                            {"classes", {"LES"}},
                            {"images", recs}};
    auto path = dir / "manifest.json";
    std::ofstream f(path, std::ios::trunc);
    f << manifest.dump(2) << "\n";
    return path;
}

int flood_fill_component_count(const Mask& m) {
    std::vector<char> seen(size_t(m.h) * m.w, 0);
    int count = 0;
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) {
            if (!m.at(y, x) || seen[size_t(y) * m.w + x]) continue;
            ++count;
            std::deque<std::pair<int, int>> st{{y, x}};
            seen[size_t(y) * m.w + x] = 1;
            while (!st.empty()) {
                auto [cy, cx] = st.back();
                st.pop_back();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int ny = cy + dy, nx = cx + dx;
                        if (ny < 0 || ny >= m.h || nx < 0 || nx >= m.w) continue;
                        if (!m.at(ny, nx) || seen[size_t(ny) * m.w + nx]) continue;
                        seen[size_t(ny) * m.w + nx] = 1;
                        st.push_back({ny, nx});
                    }
            }
        }
    return count;
}

std::vector<int> dbscan_reference(const std::vector<std::pair<double, double>>& pts, double eps,
                                  int min_points) {
    const int n = int(pts.size());
    auto dist = [&](int i, int j) {
        return std::hypot(pts[size_t(i)].first - pts[size_t(j)].first,
                          pts[size_t(i)].second - pts[size_t(j)].second);
    };
    std::vector<std::vector<int>> nb(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (dist(i, j) <= eps) nb[size_t(i)].push_back(j);
    std::vector<char> core(n);
    for (int i = 0; i < n; ++i) core[size_t(i)] = int(nb[size_t(i)].size()) >= min_points;

    std::vector<int> label(n, -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (label[size_t(i)] >= 0 || !core[size_t(i)]) continue;
        int cid = next++;
        std::deque<int> q{i};
        label[size_t(i)] = cid;
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            if (!core[size_t(u)]) continue;
            for (int vtx : nb[size_t(u)]) {
                if (label[size_t(vtx)] >= 0) continue;
                label[size_t(vtx)] = cid;
                q.push_back(vtx);
            }
        }
    }
    for (int i = 0; i < n; ++i)
        if (label[size_t(i)] < 0) label[size_t(i)] = next++;
    return label;
}

std::vector<double> masked_mean_oracle(const nn::Tensor& f, const Mask& region) {
    const int c = f.dim(0), h = f.dim(1), w = f.dim(2);
    std::vector<double> out(size_t(c), 0.0);
    int64_t n = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!region.at(y, x)) continue;
            ++n;
            for (int j = 0; j < c; ++j) out[size_t(j)] += f[(int64_t(j) * h + y) * w + x];
        }
    for (auto& v : out) v /= double(n);
    return out;
}

double cosine_distance_oracle(const std::vector<double>& u, const std::vector<double>& v) {
    double dot = 0, nu = 0, nv = 0;
    for (size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0 || nv == 0) return 1.0;
    return 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));
}

double classify_pixel_oracle(double d_fg, double d_bg, double alpha) {
    double efg = std::exp(-alpha * d_fg), ebg = std::exp(-alpha * d_bg);
    return efg / (efg + ebg);
}

std::vector<double> softmax_weights_oracle(const std::vector<double>& d, double beta) {
    std::vector<double> w(d.size());
    double sum = 0;
    for (size_t i = 0; i < d.size(); ++i) {
        w[i] = std::exp(beta * d[i]);
        sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
}

double dice_bce_oracle(const std::vector<double>& p, const std::vector<uint8_t>& g) {
    double inter = 0, sp = 0, sg = 0, bce = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        double gi = g[i] ? 1.0 : 0.0;
        inter += p[i] * gi;
        sp += p[i];
        sg += gi;
        double pc = std::min(std::max(p[i], 1e-7), 1.0 - 1e-7);
        bce -= gi * std::log(pc) + (1 - gi) * std::log(1 - pc);
    }
    return (1.0 - (2 * inter + 1.0) / (sp + sg + 1.0)) + bce / double(p.size());
}

double relative_err(double a, double b) {
    double scale = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / scale;
}

double fd_check(const nn::NamedParams& params, const std::function<double()>& loss_eval,
                const std::vector<nn::Tensor>& analytic, int samples_per_tensor,
                std::mt19937_64& rng, double h) {
    double worst = 0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi].second;
        const int64_t n = p->val.size();
        std::uniform_int_distribution<int64_t> pick(0, n - 1);
        for (int s = 0; s < samples_per_tensor; ++s) {
            int64_t j = n <= samples_per_tensor ? (s < n ? s : pick(rng)) : pick(rng);
            double saved = p->val[j];
            p->val[j] = saved + h;
            double lp = loss_eval();
            p->val[j] = saved - h;
            double lm = loss_eval();
            p->val[j] = saved;
            double fd = (lp - lm) / (2 * h);
            double an = analytic[pi][j];
            if (std::fabs(fd) < 1e-7 && std::fabs(an) < 1e-7) continue;
            worst = std::max(worst, relative_err(an, fd));
        }
    }
    return worst;
}

}  // namespace testutil
