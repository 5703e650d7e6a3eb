#include "lesref/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "lesref/common.hpp"

namespace lesref::train {

using nlohmann::json;

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
    if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
    if (lr <= 0) throw ValidationError("train config: lr must be > 0");
    if (plateau_patience < 1) throw ValidationError("train config: patience must be >= 1");
    if (plateau_factor <= 0 || plateau_factor >= 1)
        throw ValidationError("train config: plateau factor must be in (0,1)");
    if (val_fraction < 0 || val_fraction >= 1)
        throw ValidationError("train config: val_fraction must be in [0,1)");
}

namespace {

inline double reflect101(double v, int n) {
    if (n == 1) return 0;
    const double period = 2.0 * (n - 1);
    v = std::fmod(std::fabs(v), period);
    return v > n - 1 ? period - v : v;
}

// inverse mapping of shift/scale/rotate about the patch centre
struct InverseAffine {
    double m00, m01, m10, m11, ty, tx;

    static InverseAffine from(const AffineParams& p, int h, int w) {
        const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
        const double ca = std::cos(p.angle_rad), sa = std::sin(p.angle_rad);
        const double inv_s = 1.0 / p.scale;
        // source position for an output pixel: in = R/s * (out - c - t) + c
        InverseAffine a;
        a.m00 = ca * inv_s;
        a.m01 = sa * inv_s;
        a.m10 = -sa * inv_s;
        a.m11 = ca * inv_s;
        a.ty = cy - (a.m00 * (cy + p.shift_y) + a.m01 * (cx + p.shift_x));
        a.tx = cx - (a.m10 * (cy + p.shift_y) + a.m11 * (cx + p.shift_x));
        return a;
    }
    void map(double oy, double ox, double* iy, double* ix) const {
        *iy = m00 * oy + m01 * ox + ty;
        *ix = m10 * oy + m11 * ox + tx;
    }
};

}  // namespace

Mask warp_mask_nearest(const Mask& in, const AffineParams& p) {
    if (!p.applied) return in;
    auto a = InverseAffine::from(p, in.h, in.w);
    Mask out(in.h, in.w);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            double iy, ix;
            a.map(y, x, &iy, &ix);
            int ny = int(std::floor(iy + 0.5)), nx = int(std::floor(ix + 0.5));
            out.at(y, x) = in.in_bounds(ny, nx) && in.at(ny, nx) ? 1 : 0;
        }
    return out;
}

ImageU16 warp_image_bilinear(const ImageU16& in, const AffineParams& p) {
    if (!p.applied) return in;
    auto a = InverseAffine::from(p, in.h, in.w);
    ImageU16 out(in.h, in.w);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
            double iy, ix;
            a.map(y, x, &iy, &ix);
            iy = reflect101(iy, in.h);
            ix = reflect101(ix, in.w);
            int y0 = std::clamp(int(std::floor(iy)), 0, in.h - 1);
            int x0 = std::clamp(int(std::floor(ix)), 0, in.w - 1);
            int y1 = std::min(y0 + 1, in.h - 1), x1 = std::min(x0 + 1, in.w - 1);
            double fy = iy - y0, fx = ix - x0;
            for (int c = 0; c < 3; ++c) {
                double v0 = in.at(y0, x0, c) * (1 - fx) + in.at(y0, x1, c) * fx;
                double v1 = in.at(y1, x0, c) * (1 - fx) + in.at(y1, x1, c) * fx;
                double v = v0 * (1 - fy) + v1 * fy;
                out.at(y, x, c) = uint16_t(std::lround(std::clamp(v, 0.0, 65535.0)));
            }
        }
    return out;
}

namespace {

ImageU16 gaussian_blur(const ImageU16& in, double sigma) {
    const int r = std::max(1, int(std::ceil(2.5 * sigma)));
    std::vector<double> k(size_t(2 * r + 1));
    double sum = 0;
    for (int i = -r; i <= r; ++i) {
        k[size_t(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[size_t(i + r)];
    }
    for (auto& v : k) v /= sum;

    ImageU16 tmp(in.h, in.w), out(in.h, in.w);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0;
                for (int i = -r; i <= r; ++i) {
                    int xx = int(reflect101(double(x + i), in.w));
                    acc += k[size_t(i + r)] * in.at(y, xx, c);
                }
                tmp.at(y, x, c) = uint16_t(std::lround(std::clamp(acc, 0.0, 65535.0)));
            }
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0;
                for (int i = -r; i <= r; ++i) {
                    int yy = int(reflect101(double(y + i), in.h));
                    acc += k[size_t(i + r)] * tmp.at(yy, x, c);
                }
                out.at(y, x, c) = uint16_t(std::lround(std::clamp(acc, 0.0, 65535.0)));
            }
    return out;
}

void brightness_contrast(ImageU16* img, double brightness, double contrast) {
    for (auto& v : img->v) {
        double u = double(v) / 65535.0;
        u = (u - 0.5) * (1.0 + contrast) + 0.5 + brightness;
        v = uint16_t(std::lround(std::clamp(u, 0.0, 1.0) * 65535.0));
    }
}

}  // namespace

AugmentResult augment(const data::PatchPair& pair, std::mt19937_64& rng,
                      const AugmentConfig& cfg) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    // fixed draw order keeps the stream reproducible whatever fires
    const double u_affine = uni(rng);
    const double dy = (2 * uni(rng) - 1) * cfg.shift * pair.image.h;
    const double dx = (2 * uni(rng) - 1) * cfg.shift * pair.image.w;
    const double sc = 1.0 + (2 * uni(rng) - 1) * cfg.scale;
    const double ang = (2 * uni(rng) - 1) * cfg.rotate_deg * M_PI / 180.0;
    const double u_blur = uni(rng);
    const double sigma =
        cfg.blur_sigma_min + uni(rng) * (cfg.blur_sigma_max - cfg.blur_sigma_min);
    const double u_bc = uni(rng);
    const double br = (2 * uni(rng) - 1) * cfg.brightness;
    const double ct = (2 * uni(rng) - 1) * cfg.contrast;

    AugmentResult res;
    res.affine.applied = u_affine < cfg.p_affine;
    res.affine.shift_y = dy;
    res.affine.shift_x = dx;
    res.affine.scale = sc;
    res.affine.angle_rad = ang;

    auto apply = [&](const AffineParams& af) {
        data::PatchPair out = pair;
        if (af.applied) {
            out.image = warp_image_bilinear(pair.image, af);
            out.coarse = warp_mask_nearest(pair.coarse, af);
            out.gt = warp_mask_nearest(pair.gt, af);
        }
        if (u_blur < cfg.p_blur) out.image = gaussian_blur(out.image, sigma);
        if (u_bc < cfg.p_brightness_contrast) brightness_contrast(&out.image, br, ct);
        return out;
    };

    res.pair = apply(res.affine);
    if (res.pair.coarse.empty_fg() || res.pair.coarse.full_fg()) {
        // retry once without the geometric part
        res.affine.applied = false;
        res.pair = apply(res.affine);
        if (res.pair.coarse.empty_fg() || res.pair.coarse.full_fg()) res.skipped = true;
    }
    return res;
}

double mask_iou(const Mask& a, const Mask& b) {
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        bool x = a.v[i], y = b.v[i];
        inter += x && y;
        uni += x || y;
    }
    if (uni == 0) return std::numeric_limits<double>::quiet_NaN();
    return double(inter) / double(uni);
}

FloatRaster upsample_prob(const nn::Tensor& prob, int out_size) {
    FloatRaster in(prob.dim(0), prob.dim(1));
    for (int64_t i = 0; i < prob.size(); ++i) in.v[size_t(i)] = float(prob[i]);
    return resize_bilinear(in, out_size, out_size);
}

FloatRaster patch_probability(net::RefineNet& net, const ImageU16& patch, const Mask& coarse,
                              net::HeadKind head) {
    auto out = net.forward(patch, coarse, head, /*training=*/false, /*update_bn=*/false);
    if (out.degenerate) {  // prototypes undefined: hand back the coarse mask
        FloatRaster r(patch.h, patch.w);
        for (size_t i = 0; i < r.v.size(); ++i) r.v[i] = coarse.v[i] ? 1.f : 0.f;
        return r;
    }
    return upsample_prob(out.prob->val, patch.h);
}

ValidationReport validate(const std::vector<data::PatchPair>& pairs, net::RefineNet& net,
                          net::HeadKind head, double tau) {
    std::map<std::string, std::vector<double>> ious;
    for (const auto& p : pairs) {
        FloatRaster prob = patch_probability(net, p.image, p.coarse, head);
        Mask refined = threshold_raster(prob, float(tau));
        double iou = mask_iou(refined, p.gt);
        if (!std::isnan(iou)) ious[p.placement.lesion_class].push_back(iou);
    }
    ValidationReport rep;
    double acc = 0;
    for (auto& [cls, v] : ious) {
        ClassIoU ci;
        ci.n = int(v.size());
        for (double x : v) ci.mean += x;
        ci.mean /= double(ci.n);
        for (double x : v) ci.stddev += (x - ci.mean) * (x - ci.mean);
        ci.stddev = std::sqrt(ci.stddev / double(ci.n));
        rep.per_class[cls] = ci;
        acc += ci.mean;
        ++rep.n_classes;
    }
    rep.mean_iou = rep.n_classes ? acc / rep.n_classes : 0.0;
    return rep;
}

namespace {

json report_to_json(const ValidationReport& r) {
    json per = json::object();
    for (const auto& [cls, ci] : r.per_class)
        per[cls] = json{{"mean", ci.mean}, {"std", ci.stddev}, {"n", ci.n}};
    return json{{"per_class", per}, {"mean", r.mean_iou}};
}

}  // namespace

TrainResult train(const std::vector<data::PatchPair>& pairs, const net::ModelConfig& model_cfg,
                  const TrainConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    model_cfg.validate();
    if (pairs.empty()) throw ValidationError("train: empty patch store");
    std::filesystem::create_directories(out_dir);

    std::mt19937_64 rng(cfg.seed);
    net::RefineNet net(model_cfg, cfg.seed);

    // stratified split
    std::map<std::string, std::vector<int>> by_class;
    for (size_t i = 0; i < pairs.size(); ++i)
        by_class[pairs[i].placement.lesion_class].push_back(int(i));
    std::vector<int> train_idx, val_idx;
    for (auto& [cls, idx] : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        int nv = int(std::floor(cfg.val_fraction * double(idx.size())));
        for (size_t i = 0; i < idx.size(); ++i)
            (int(i) < nv ? val_idx : train_idx).push_back(idx[size_t(i)]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    if (train_idx.empty()) throw ValidationError("train: no training pairs after split");

    auto subset = [&](const std::vector<int>& idx) {
        std::vector<data::PatchPair> v;
        v.reserve(idx.size());
        for (int i : idx) v.push_back(pairs[size_t(i)]);
        return v;
    };
    const std::vector<data::PatchPair> val_pairs = subset(val_idx);
    const std::vector<data::PatchPair> train_pairs = subset(train_idx);

    nn::Adam opt;
    opt.lr = cfg.lr;

    TrainResult res;
    res.metrics_log = out_dir / "metrics.jsonl";
    res.best_checkpoint = out_dir / "checkpoint_best.ckpt";
    res.final_checkpoint = out_dir / "checkpoint_final.ckpt";
    std::ofstream log(res.metrics_log, std::ios::trunc);

    double best = -1.0;
    PlateauScheduler sched{cfg.plateau_factor, cfg.plateau_patience};
    const net::HeadKind head = model_cfg.head;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> order(train_idx.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0;
        int n_contrib = 0;
        bool diverged = false;
        for (size_t start = 0; start < order.size() && !diverged; start += size_t(cfg.batch_size)) {
            size_t end = std::min(order.size(), start + size_t(cfg.batch_size));
            const double inv_batch = 1.0 / double(end - start);
            for (size_t bi = start; bi < end; ++bi) {
                const auto& base = train_pairs[size_t(order[bi])];
                data::PatchPair sample;
                if (cfg.augment_enabled) {
                    auto ar = augment(base, rng, cfg.aug);
                    if (ar.skipped) {
                        ++res.skipped_patches;
                        continue;
                    }
                    sample = std::move(ar.pair);
                } else {
                    sample = base;
                }
                auto out = net.forward(sample.image, sample.coarse, head, /*training=*/true,
                                       /*update_bn=*/true);
                if (out.degenerate) {
                    ++res.skipped_patches;
                    continue;
                }
                Mask gt_ds = resize_nearest(sample.gt, model_cfg.feature_size(),
                                            model_cfg.feature_size());
                nn::Var loss = net::compute_loss(out.prob, gt_ds);
                if (!std::isfinite(loss->val[0])) {
                    diverged = true;
                    break;
                }
                nn::backward(loss, inv_batch);
                epoch_loss += loss->val[0];
                ++n_contrib;
            }
            if (!diverged) opt.step(net.parameters());
        }
        if (diverged) {
            nn::Adam::zero_grads(net.parameters());
            res.diverged = true;
            res.epochs_run = epoch;
            break;
        }
        epoch_loss = n_contrib ? epoch_loss / n_contrib : 0.0;

        ValidationReport vrep = validate(val_pairs.empty() ? train_pairs : val_pairs, net, head,
                                         model_cfg.threshold);
        double monitored = vrep.mean_iou;

        ValidationReport trep;
        bool have_train_rep = false;
        if (cfg.stop_at_train_iou > 0) {
            if (val_pairs.empty()) {
                trep = vrep;
            } else {
                trep = validate(train_pairs, net, head, model_cfg.threshold);
            }
            have_train_rep = true;
        }

        json row{{"epoch", epoch},
                 {"train_loss", epoch_loss},
                 {"val_iou_per_class", report_to_json(vrep)["per_class"]},
                 {"val_mean_iou", monitored},
                 {"lr", opt.lr},
                 {"skipped", res.skipped_patches}};
        if (have_train_rep) row["train_mean_iou"] = trep.mean_iou;
        log << row.dump() << "\n";
        log.flush();

        if (monitored > best) {
            best = monitored;
            net::save_checkpoint(net, opt.t, res.best_checkpoint);
        }
        if (sched.observe(monitored)) opt.lr *= sched.factor;
        res.epochs_run = epoch + 1;
        if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)
            net::save_checkpoint(net, opt.t, res.final_checkpoint);
        if (have_train_rep && trep.mean_iou >= cfg.stop_at_train_iou) {
            res.early_stopped = true;
            break;
        }
    }

    res.best_val_iou = std::max(best, 0.0);
    net::save_checkpoint(net, opt.t, res.final_checkpoint);
    if (best < 0) net::save_checkpoint(net, opt.t, res.best_checkpoint);
    return res;
}

}  // namespace lesref::train
