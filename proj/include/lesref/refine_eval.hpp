#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lesref/coarse_sim.hpp"
#include "lesref/dataset.hpp"
#include "lesref/protonet.hpp"
#include "lesref/raster.hpp"

// Full-image refinement (per-ellipse patches, max-merge, threshold), IoU
// evaluation, the reduction-factor sweep, and overlay rendering.
namespace lesref::refine {

struct RefinementResult {
    FloatRaster probability;       // zero outside every patch footprint
    Mask refined;                  // probability >= tau
    std::vector<RectI> footprints;
};

// Writes patch probabilities into the canvas, overlapping pixels take the max.
void merge_patch_probability(FloatRaster& canvas, const RectI& rect, const FloatRaster& prob);

RefinementResult refine_image(const ImageU16& image, const sim::CoarseMask& coarse,
                              net::RefineNet& net, net::HeadKind head, double tau,
                              int patch_size, double margin);

struct ClassScore {
    double mean_iou = 0, std_iou = 0;
    int n_images = 0;
    bool applicable = false;
};
struct EvalReport {
    std::map<std::string, ClassScore> per_class;
    double average = 0;  // unweighted over applicable classes
    int n_classes = 0;
    std::string config_fingerprint;
};

// IoU of one image; NaN when both masks are empty (image excluded).
double image_iou(const Mask& refined, const Mask& gt);

struct ImageScore {
    std::string image_id, lesion_class;
    double iou = 0;
};
EvalReport aggregate_scores(const std::vector<ImageScore>& scores,
                            const std::vector<std::string>& classes,
                            const std::string& fingerprint);

void write_eval_report_json(const EvalReport&, const std::filesystem::path&);
void write_eval_report_csv(const EvalReport&, const std::filesystem::path&);

struct SweepRow {
    double factor = 0;
    std::string lesion_class, head;
    double mean_iou = 0, std_iou = 0;
};
void write_sweep_csv(const std::vector<SweepRow>&, const std::filesystem::path&);

// Line plot of mean IoU (averaged over classes) vs factor, one series per head.
void plot_sweep(const std::vector<SweepRow>&, const std::filesystem::path& png_path);

// GT boundary red, coarse green, refined blue, superpixels (optional) yellow.
void render_overlay(const ImageU16& image, const Mask& coarse, const Mask& refined,
                    const Mask& gt, const std::optional<Mask>& superpixel_boundaries,
                    const std::filesystem::path& out_png);

struct SweepSpec {
    std::vector<double> factors{1.0, 1.25, 1.5, 1.75, 2.0};
    int patch_size = 256;
    double margin = 0.2;
    double tau = 0.5;
    sim::SimConfig sim;
};

// Re-simulates coarse masks per factor, refines with every head, and reports
// (factor, class, head) IoU rows. A pseudo-head "coarse" scores the
// unrefined simulated masks. Heads may share one network.
std::vector<SweepRow> reduction_sweep(const data::DatasetManifest& manifest,
                                      const std::map<std::string, net::RefineNet*>& heads,
                                      const SweepSpec& spec);

// Coarse-mask sidecars written by the simulator.
void save_coarse(const sim::CoarseMask&, const std::string& image_id,
                 const std::string& lesion_class, double reduction_factor,
                 const std::filesystem::path& dir);
sim::CoarseMask load_coarse(const std::filesystem::path& dir, const std::string& image_id,
                            const std::string& lesion_class);

}  // namespace lesref::refine
