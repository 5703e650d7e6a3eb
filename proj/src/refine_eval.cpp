#include "lesref/refine_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "lesref/common.hpp"
#include "lesref/trainer.hpp"

namespace lesref::refine {

using nlohmann::json;

void merge_patch_probability(FloatRaster& canvas, const RectI& rect, const FloatRaster& prob) {
    if (prob.h != rect.h || prob.w != rect.w)
        throw ValidationError("merge: patch raster does not match its rectangle");
    for (int y = 0; y < rect.h; ++y)
        for (int x = 0; x < rect.w; ++x) {
            float& c = canvas.at(rect.y + y, rect.x + x);
            c = std::max(c, prob.at(y, x));
        }
}

RefinementResult refine_image(const ImageU16& image, const sim::CoarseMask& coarse,
                              net::RefineNet& net, net::HeadKind head, double tau,
                              int patch_size, double margin) {
    if (coarse.ellipses.empty())
        throw ValidationError("refine_image: coarse mask has no ellipses");
    RefinementResult res;
    res.probability = FloatRaster(image.h, image.w, 0.f);
    for (const auto& e : coarse.ellipses) {
        RectI rect = data::compute_crop_rect(e, image.h, image.w, margin);
        ImageU16 patch = resize_bilinear(crop(image, rect), patch_size, patch_size);
        Mask cpatch = resize_nearest(crop(coarse.raster, rect), patch_size, patch_size);
        FloatRaster prob;
        if (cpatch.empty_fg()) {
            // nothing to refine in this patch; it contributes its own coarse
            // crop (all zero here) so the footprint still exists
            prob = FloatRaster(rect.h, rect.w, 0.f);
        } else {
            prob = resize_bilinear(train::patch_probability(net, patch, cpatch, head), rect.h,
                                   rect.w);
        }
        merge_patch_probability(res.probability, rect, prob);
        res.footprints.push_back(rect);
    }
    res.refined = threshold_raster(res.probability, float(tau));
    return res;
}

double image_iou(const Mask& refined, const Mask& gt) { return train::mask_iou(refined, gt); }

EvalReport aggregate_scores(const std::vector<ImageScore>& scores,
                            const std::vector<std::string>& classes,
                            const std::string& fingerprint) {
    EvalReport rep;
    rep.config_fingerprint = fingerprint;
    std::map<std::string, std::vector<double>> byc;
    for (const auto& s : scores)
        if (!std::isnan(s.iou)) byc[s.lesion_class].push_back(s.iou);
    double acc = 0;
    int napp = 0;
    for (const auto& cls : classes) {
        ClassScore cs;
        auto it = byc.find(cls);
        if (it != byc.end() && !it->second.empty()) {
            cs.applicable = true;
            cs.n_images = int(it->second.size());
            for (double v : it->second) cs.mean_iou += v;
            cs.mean_iou /= cs.n_images;
            for (double v : it->second)
                cs.std_iou += (v - cs.mean_iou) * (v - cs.mean_iou);
            cs.std_iou = std::sqrt(cs.std_iou / cs.n_images);
            acc += cs.mean_iou;
            ++napp;
        }
        rep.per_class[cls] = cs;
    }
    rep.n_classes = napp;
    rep.average = napp ? acc / napp : 0.0;
    return rep;
}

void write_eval_report_json(const EvalReport& rep, const std::filesystem::path& path) {
    json j;
    for (const auto& [cls, cs] : rep.per_class) {
        if (cs.applicable)
            j["classes"][cls] = json{{"mean_iou", cs.mean_iou},
                                     {"std_iou", cs.std_iou},
                                     {"n_images", cs.n_images}};
        else
            j["classes"][cls] = json{{"applicable", false}};
    }
    j["average"] = rep.average;
    j["config_fingerprint"] = rep.config_fingerprint;
    std::ofstream f(path, std::ios::trunc);
    f << j.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write report: " + path.string());
}

void write_eval_report_csv(const EvalReport& rep, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    f << "class,mean_iou,std_iou,n_images\n";
    for (const auto& [cls, cs] : rep.per_class) {
        if (cs.applicable)
            f << cls << "," << cs.mean_iou << "," << cs.std_iou << "," << cs.n_images << "\n";
        else
            f << cls << ",na,na,0\n";
    }
    f << "average," << rep.average << ",,\n";
    if (!f) throw std::runtime_error("cannot write report: " + path.string());
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    f << "factor,class,head,mean_iou,std_iou\n";
    for (const auto& r : rows)
        f << r.factor << "," << r.lesion_class << "," << r.head << "," << r.mean_iou << ","
          << r.std_iou << "\n";
    if (!f) throw std::runtime_error("cannot write sweep csv: " + path.string());
}

void plot_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& png_path) {
    // average across classes per (head, factor)
    std::map<std::string, std::map<double, std::pair<double, int>>> series;
    for (const auto& r : rows) {
        auto& s = series[r.head][r.factor];
        s.first += r.mean_iou;
        ++s.second;
    }
    const int W = 720, H = 480, ml = 70, mr = 170, mt = 40, mb = 60;
    cv::Mat img(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
    double fmin = 1e300, fmax = -1e300;
    for (auto& [h, pts] : series)
        for (auto& [f, v] : pts) {
            fmin = std::min(fmin, f);
            fmax = std::max(fmax, f);
        }
    if (!std::isfinite(fmin)) return;
    if (fmax == fmin) fmax = fmin + 1;
    auto px = [&](double f) { return ml + int((f - fmin) / (fmax - fmin) * (W - ml - mr)); };
    auto py = [&](double iou) { return H - mb - int(iou * (H - mt - mb)); };

    cv::line(img, {ml, mt}, {ml, H - mb}, {0, 0, 0}, 1);
    cv::line(img, {ml, H - mb}, {W - mr, H - mb}, {0, 0, 0}, 1);
    for (int i = 0; i <= 10; ++i) {
        int y = py(i / 10.0);
        cv::line(img, {ml - 4, y}, {ml, y}, {0, 0, 0}, 1);
        cv::putText(img, cv::format("%.1f", i / 10.0), {8, y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                    {0, 0, 0}, 1);
    }
    cv::putText(img, "mean IoU vs reduction factor", {ml, mt - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.55,
                {0, 0, 0}, 1);

    const std::vector<cv::Scalar> palette = {
        {180, 60, 30}, {30, 120, 200}, {40, 160, 40}, {20, 20, 200}, {160, 30, 160}};
    int si = 0;
    for (auto& [head, pts] : series) {
        cv::Scalar col = palette[size_t(si) % palette.size()];
        cv::Point prev(-1, -1);
        std::vector<std::pair<double, double>> line;
        for (auto& [f, v] : pts) line.emplace_back(f, v.first / v.second);
        for (auto& [f, iou] : line) {
            cv::Point p(px(f), py(iou));
            cv::circle(img, p, 3, col, -1);
            cv::putText(img, cv::format("%d", int(std::lround(f * 100))), {p.x - 10, H - mb + 18},
                        cv::FONT_HERSHEY_SIMPLEX, 0.35, {0, 0, 0}, 1);
            if (prev.x >= 0) cv::line(img, prev, p, col, 2);
            prev = p;
        }
        cv::putText(img, head, {W - mr + 12, mt + 20 * (si + 1)}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                    col, 1);
        ++si;
    }
    if (!cv::imwrite(png_path.string(), img))
        throw std::runtime_error("cannot write plot: " + png_path.string());
}

namespace {

void draw_boundary(cv::Mat& img, const Mask& m, const cv::Vec3b& color) {
    Mask b = boundary_pixels(m);
    for (int y = 0; y < b.h; ++y)
        for (int x = 0; x < b.w; ++x)
            if (b.at(y, x)) img.at<cv::Vec3b>(y, x) = color;
}

}  // namespace

void render_overlay(const ImageU16& image, const Mask& coarse, const Mask& refined,
                    const Mask& gt, const std::optional<Mask>& superpixel_boundaries,
                    const std::filesystem::path& out_png) {
    cv::Mat img(image.h, image.w, CV_8UC3);
    for (int y = 0; y < image.h; ++y)
        for (int x = 0; x < image.w; ++x)
            img.at<cv::Vec3b>(y, x) = {uint8_t(image.at(y, x, 2) / 257),
                                       uint8_t(image.at(y, x, 1) / 257),
                                       uint8_t(image.at(y, x, 0) / 257)};
    if (superpixel_boundaries) {
        for (int y = 0; y < superpixel_boundaries->h; ++y)
            for (int x = 0; x < superpixel_boundaries->w; ++x)
                if (superpixel_boundaries->at(y, x)) img.at<cv::Vec3b>(y, x) = {0, 255, 255};
    }
    draw_boundary(img, coarse, {0, 255, 0});
    draw_boundary(img, refined, {255, 0, 0});  // BGR: blue
    draw_boundary(img, gt, {0, 0, 255});       // red
    if (!cv::imwrite(out_png.string(), img))
        throw std::runtime_error("cannot write overlay: " + out_png.string());
}

std::vector<SweepRow> reduction_sweep(const data::DatasetManifest& manifest,
                                      const std::map<std::string, net::RefineNet*>& heads,
                                      const SweepSpec& spec) {
    std::vector<SweepRow> rows;
    for (double factor : spec.factors) {
        sim::SimConfig sc = spec.sim;
        sc.reduction_factor = factor;
        // per (class, head) ious over images
        std::map<std::string, std::map<std::string, std::vector<double>>> ious;
        for (const auto& rec : manifest.images) {
            ImageU16 image = load_image_rgb(rec.image);
            for (const auto& [cls, mask_path] : rec.masks) {
                Mask fine = load_mask(mask_path);
                if (fine.empty_fg()) continue;
                auto cm = sim::simulate_coarse_mask(fine, sc);
                double ciou = image_iou(cm.raster, fine);
                if (!std::isnan(ciou)) ious[cls]["coarse"].push_back(ciou);
                for (const auto& [hname, netp] : heads) {
                    auto rr = refine_image(image, cm, *netp,
                                           net::head_from_name(hname), spec.tau,
                                           spec.patch_size, spec.margin);
                    double iou = image_iou(rr.refined, fine);
                    if (!std::isnan(iou)) ious[cls][hname].push_back(iou);
                }
            }
        }
        for (const auto& [cls, byhead] : ious)
            for (const auto& [hname, v] : byhead) {
                SweepRow r;
                r.factor = factor;
                r.lesion_class = cls;
                r.head = hname;
                for (double x : v) r.mean_iou += x;
                r.mean_iou /= double(v.size());
                for (double x : v) r.std_iou += (x - r.mean_iou) * (x - r.mean_iou);
                r.std_iou = std::sqrt(r.std_iou / double(v.size()));
                rows.push_back(r);
            }
    }
    return rows;
}

void save_coarse(const sim::CoarseMask& cm, const std::string& image_id,
                 const std::string& lesion_class, double reduction_factor,
                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_mask_png(cm.raster, dir / (image_id + "__" + lesion_class + ".png"));
    json j;
    j["image_id"] = image_id;
    j["class"] = lesion_class;
    j["reduction_factor"] = reduction_factor;
    json arr = json::array();
    for (const auto& e : cm.ellipses)
        arr.push_back(json{{"cx", e.cx}, {"cy", e.cy}, {"a", e.a}, {"b", e.b}, {"theta", e.theta}});
    j["ellipses"] = arr;
    std::ofstream f(dir / (image_id + "__" + lesion_class + ".ellipses.json"), std::ios::trunc);
    f << j.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write ellipse sidecar for " + image_id);
}

sim::CoarseMask load_coarse(const std::filesystem::path& dir, const std::string& image_id,
                            const std::string& lesion_class) {
    sim::CoarseMask cm;
    auto base = dir / (image_id + "__" + lesion_class);
    cm.raster = load_mask(base.string() + ".png");
    std::ifstream f(base.string() + ".ellipses.json");
    if (!f)
        throw ValidationError("missing ellipse sidecar: " + base.string() + ".ellipses.json");
    json j = json::parse(f);
    for (const auto& je : j.at("ellipses")) {
        sim::EllipseParams e;
        e.cx = je.at("cx").get<double>();
        e.cy = je.at("cy").get<double>();
        e.a = je.at("a").get<double>();
        e.b = je.at("b").get<double>();
        e.theta = je.at("theta").get<double>();
        cm.ellipses.push_back(e);
    }
    return cm;
}

}  // namespace lesref::refine
