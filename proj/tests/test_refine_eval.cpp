#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <opencv2/imgcodecs.hpp>

#include "lesref/common.hpp"
#include "lesref/refine_eval.hpp"
#include "lesref/trainer.hpp"
#include "testutil.hpp"

using namespace lesref;
using namespace lesref::refine;
namespace fs = std::filesystem;

namespace {

struct Layout {
    std::vector<RectI> rects;
    std::vector<FloatRaster> probs;
};

Layout random_layout(int H, int W, int n, std::mt19937_64& rng) {
    Layout l;
    std::uniform_int_distribution<int> ux(0, W - 12), uy(0, H - 12), us(4, 11);
    std::uniform_real_distribution<double> up(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        int w = us(rng), h = us(rng);
        RectI r{std::min(ux(rng), W - w), std::min(uy(rng), H - h), w, h};
        FloatRaster p(r.h, r.w);
        for (auto& v : p.v) v = float(up(rng));
        l.rects.push_back(r);
        l.probs.push_back(std::move(p));
    }
    return l;
}

FloatRaster merge_all(int H, int W, const Layout& l, const std::vector<size_t>& order) {
    FloatRaster canvas(H, W, 0.f);
    for (size_t i : order) merge_patch_probability(canvas, l.rects[i], l.probs[i]);
    return canvas;
}

}  // namespace

TEST_SUITE_BEGIN("refine_eval");

TEST_CASE("merge equals the per-pixel max oracle; idempotent and order-free") {
    std::mt19937_64 rng(81);
    const int H = 40, W = 50;
    for (int t = 0; t < 10; ++t) {
        Layout l = random_layout(H, W, 6, rng);
        std::vector<size_t> order(l.rects.size());
        std::iota(order.begin(), order.end(), 0);
        FloatRaster merged = merge_all(H, W, l, order);

        // oracle: independent per-pixel max over all placed rasters
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                float want = 0.f;
                for (size_t i = 0; i < l.rects.size(); ++i) {
                    const RectI& r = l.rects[i];
                    if (y >= r.y && y < r.y + r.h && x >= r.x && x < r.x + r.w)
                        want = std::max(want, l.probs[i].at(y - r.y, x - r.x));
                }
                REQUIRE(merged.at(y, x) == want);
            }

        // duplicating the patch list changes nothing
        std::vector<size_t> twice = order;
        twice.insert(twice.end(), order.begin(), order.end());
        CHECK(merge_all(H, W, l, twice).v == merged.v);

        // order never matters
        std::shuffle(order.begin(), order.end(), rng);
        CHECK(merge_all(H, W, l, order).v == merged.v);

        // provenance: nonzero probability only inside footprints
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (merged.at(y, x) == 0.f) continue;
                bool inside = false;
                for (const RectI& r : l.rects)
                    inside |= y >= r.y && y < r.y + r.h && x >= r.x && x < r.x + r.w;
                REQUIRE(inside);
            }
    }
}

TEST_CASE("two overlapping patches: shared pixel takes the larger probability") {
    FloatRaster canvas(8, 8, 0.f);
    FloatRaster a(4, 4, 0.3f), b(4, 4, 0.7f);
    merge_patch_probability(canvas, {0, 0, 4, 4}, a);
    merge_patch_probability(canvas, {2, 2, 4, 4}, b);
    CHECK(canvas.at(3, 3) == 0.7f);
    CHECK(canvas.at(0, 0) == 0.3f);
    CHECK(canvas.at(5, 5) == 0.7f);
}

TEST_CASE("threshold monotonicity") {
    std::mt19937_64 rng(82);
    FloatRaster p(20, 20);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& v : p.v) v = float(u(rng));
    Mask m3 = threshold_raster(p, 0.3f);
    Mask m5 = threshold_raster(p, 0.5f);
    Mask m7 = threshold_raster(p, 0.7f);
    CHECK(m3.count() >= m5.count());
    CHECK(m5.count() >= m7.count());
    for (size_t i = 0; i < p.v.size(); ++i) {
        if (m7.v[i]) CHECK(m5.v[i]);
        if (m5.v[i]) CHECK(m3.v[i]);
    }
}

TEST_CASE("evaluation aggregation: identity, disjoint, exclusion, not-applicable") {
    Mask a = testutil::mask_from_art("110\n000");
    Mask b = testutil::mask_from_art("001\n100");
    CHECK(image_iou(a, a) == doctest::Approx(1.0));
    CHECK(image_iou(a, b) == doctest::Approx(0.0));

    std::vector<ImageScore> scores;
    scores.push_back({"i0", "EX", 1.0});
    scores.push_back({"i1", "EX", 0.5});
    scores.push_back({"i2", "EX", std::numeric_limits<double>::quiet_NaN()});  // both empty
    auto rep = aggregate_scores(scores, {"EX", "HE"}, "fp");
    CHECK(rep.per_class.at("EX").applicable);
    CHECK(rep.per_class.at("EX").n_images == 2);
    CHECK(rep.per_class.at("EX").mean_iou == doctest::Approx(0.75));
    CHECK_FALSE(rep.per_class.at("HE").applicable);
    CHECK(rep.n_classes == 1);
    CHECK(rep.average == doctest::Approx(0.75));

    auto dir = fs::temp_directory_path() / "lesref_eval_rep";
    fs::create_directories(dir);
    write_eval_report_json(rep, dir / "r.json");
    write_eval_report_csv(rep, dir / "r.csv");
    CHECK(fs::exists(dir / "r.json"));
    CHECK(fs::exists(dir / "r.csv"));
}

TEST_CASE("refine_image: single patch placement and merged output") {
    // a small trained-free check: the refined raster must live inside the
    // footprints and the probability stays in [0,1]
    std::mt19937_64 rng(83);
    auto s = testutil::make_synth_image(96, 96, 2, 3, rng);
    sim::SimConfig sc;
    auto cm = sim::simulate_coarse_mask(s.fine, sc);
    REQUIRE(!cm.ellipses.empty());

    net::ModelConfig mc;
    mc.input_size = 32;
    mc.depth = 2;
    mc.base_width = 3;
    mc.feature_channels = 6;
    mc.fused_channels = 6;
    net::RefineNet net(mc, 13);

    auto rr = refine_image(s.image, cm, net, net::HeadKind::Prototypical, 0.5, 32, 0.2);
    CHECK(rr.footprints.size() == cm.ellipses.size());
    for (float v : rr.probability.v) {
        CHECK(v >= 0.f);
        CHECK(v <= 1.f);
    }
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) {
            if (rr.probability.at(y, x) == 0.f) continue;
            bool inside = false;
            for (const RectI& r : rr.footprints)
                inside |= y >= r.y && y < r.y + r.h && x >= r.x && x < r.x + r.w;
            REQUIRE(inside);
        }
    // thresholding matches the raster
    Mask again = threshold_raster(rr.probability, 0.5f);
    CHECK(again.v == rr.refined.v);

    CHECK_THROWS_AS(refine_image(s.image, sim::CoarseMask{Mask(96, 96), {}}, net,
                                 net::HeadKind::Prototypical, 0.5, 32, 0.2),
                    ValidationError);
}

TEST_CASE("overlay: deterministic bytes and boundary containment") {
    std::mt19937_64 rng(84);
    auto s = testutil::make_synth_image(48, 48, 1, 2, rng);
    Mask coarse = dilate_disc(s.fine, 3);
    Mask refined = dilate_disc(s.fine, 1);

    auto dir = fs::temp_directory_path() / "lesref_overlay";
    fs::create_directories(dir);
    render_overlay(s.image, coarse, refined, s.fine, std::nullopt, dir / "a.png");
    render_overlay(s.image, coarse, refined, s.fine, std::nullopt, dir / "b.png");
    std::ifstream fa(dir / "a.png", std::ios::binary), fb(dir / "b.png", std::ios::binary);
    std::string da((std::istreambuf_iterator<char>(fa)), {});
    std::string db((std::istreambuf_iterator<char>(fb)), {});
    CHECK(da == db);

    // drawn pure-green pixels sit on (a 1 px dilation of) the coarse boundary
    cv::Mat img = cv::imread((dir / "a.png").string());
    Mask edge = dilate_disc(boundary_pixels(coarse), 1);
    for (int y = 0; y < img.rows; ++y)
        for (int x = 0; x < img.cols; ++x) {
            auto px = img.at<cv::Vec3b>(y, x);
            if (px == cv::Vec3b(0, 255, 0)) REQUIRE(edge.at(y, x) == 1);
        }
}

TEST_CASE("coarse sidecar round trip") {
    std::mt19937_64 rng(85);
    auto s = testutil::make_synth_image(64, 64, 2, 3, rng);
    sim::SimConfig sc;
    auto cm = sim::simulate_coarse_mask(s.fine, sc);
    auto dir = fs::temp_directory_path() / "lesref_coarse_rt";
    fs::remove_all(dir);
    save_coarse(cm, "imgZ", "LES", 1.0, dir);
    auto back = load_coarse(dir, "imgZ", "LES");
    CHECK(back.raster.v == cm.raster.v);
    REQUIRE(back.ellipses.size() == cm.ellipses.size());
    for (size_t i = 0; i < back.ellipses.size(); ++i) {
        CHECK(back.ellipses[i].cx == doctest::Approx(cm.ellipses[i].cx));
        CHECK(back.ellipses[i].a == doctest::Approx(cm.ellipses[i].a));
    }
    CHECK_THROWS_AS(load_coarse(dir, "missing", "LES"), std::exception);
}

TEST_CASE("reduction sweep emits one row per factor, class, and head") {
    auto dir = fs::temp_directory_path() / "lesref_sweep_unit";
    fs::remove_all(dir);
    auto mpath = testutil::write_synth_dataset(dir, 2, 64, 64, 19, /*two_classes=*/true);
    auto manifest = data::load_manifest(mpath);

    net::ModelConfig mc;
    mc.input_size = 16;
    mc.depth = 2;
    mc.base_width = 2;
    mc.feature_channels = 4;
    mc.fused_channels = 4;
    net::RefineNet netp(mc, 1);

    SweepSpec spec;
    spec.factors = {1.0, 1.5, 2.0};
    spec.patch_size = 16;
    std::map<std::string, net::RefineNet*> heads{{"proto", &netp}, {"baseline", &netp}};
    auto rows = reduction_sweep(manifest, heads, spec);
    // 3 factors x 2 classes x (2 heads + coarse pseudo-head)
    CHECK(rows.size() == 3 * 2 * 3);

    write_sweep_csv(rows, dir / "sweep.csv");
    plot_sweep(rows, dir / "sweep.png");
    CHECK(fs::exists(dir / "sweep.csv"));
    CHECK(fs::exists(dir / "sweep.png"));
}

TEST_SUITE_END();
