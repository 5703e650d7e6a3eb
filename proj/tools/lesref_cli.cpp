// lesref: coarse retinal lesion annotations -> pixel-accurate masks.
// Subcommands wire the library: simulate coarse annotations from fine masks,
// extract patch pairs, train the refinement model, refine/evaluate full
// images, sweep reduction factors, render overlays.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lesref/common.hpp"
#include "lesref/config_io.hpp"
#include "lesref/dataset.hpp"
#include "lesref/refine_eval.hpp"
#include "lesref/superpixel.hpp"
#include "lesref/trainer.hpp"

using namespace lesref;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ConfigFile {
    json j = json::object();

    static ConfigFile load(const std::string& path) {
        ConfigFile c;
        if (path.empty()) return c;
        std::ifstream f(path);
        if (!f) throw ValidationError("config file not found: " + path);
        try {
            c.j = json::parse(f);
        } catch (const json::exception& e) {
            throw ValidationError("config parse error in " + path + ": " + e.what());
        }
        return c;
    }
    std::string section(const char* name) const {
        return j.contains(name) ? j[name].dump() : std::string("{}");
    }
};

void write_resolved_config(const fs::path& out_dir, const std::string& command,
                           const json& resolved) {
    fs::create_directories(out_dir);
    json j = resolved;
    j["command"] = command;
    std::ofstream f(out_dir / "resolved_config.json", std::ios::trunc);
    f << j.dump(2) << "\n";
}

json model_json(const net::ModelConfig& c) { return json::parse(to_json_text(c)); }
json train_json(const train::TrainConfig& c) { return json::parse(to_json_text(c)); }
json sim_json(const sim::SimConfig& c) { return json::parse(to_json_text(c)); }

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& manifest_path, const std::string& out,
                 const std::string& config_path, double reduction, uint64_t seed,
                 bool has_seed) {
    auto cfgfile = ConfigFile::load(config_path);
    sim::SimConfig sc = sim_config_from_json_text(cfgfile.section("sim"));
    sc.reduction_factor = reduction;
    if (has_seed) sc.seed = seed;
    sc.validate();

    auto manifest = data::load_manifest(manifest_path);
    fs::create_directories(out);
    int written = 0;
    for (const auto& rec : manifest.images) {
        for (const auto& [cls, mask_path] : rec.masks) {
            Mask fine = load_mask(mask_path);
            auto cm = sim::simulate_coarse_mask(fine, sc);
            refine::save_coarse(cm, rec.id, cls, sc.reduction_factor, out);
            ++written;
        }
    }
    write_resolved_config(out, "simulate",
                          json{{"manifest", manifest_path}, {"sim", sim_json(sc)}});
    std::cout << "simulated " << written << " coarse masks into " << out << "\n";
    return 0;
}

// ----------------------------------------------------------------- extract

int cmd_extract(const std::string& manifest_path, const std::string& coarse_dir,
                const std::string& out, int patch_size, double margin) {
    auto manifest = data::load_manifest(manifest_path);
    std::vector<data::PatchPair> pairs;
    data::ExtractStats stats;
    std::map<std::string, int> per_class;
    for (const auto& rec : manifest.images) {
        ImageU16 image = load_image_rgb(rec.image);
        for (const auto& [cls, mask_path] : rec.masks) {
            Mask fine = load_mask(mask_path);
            if (fine.empty_fg()) continue;
            auto cm = refine::load_coarse(coarse_dir, rec.id, cls);
            auto ps = data::extract_patch_pairs(image, fine, cm, rec.id, cls, patch_size,
                                                margin, &stats);
            per_class[cls] += int(ps.size());
            for (auto& p : ps) pairs.push_back(std::move(p));
        }
    }
    data::write_patch_store(pairs, out);
    write_resolved_config(out, "extract",
                          json{{"manifest", manifest_path},
                               {"coarse", coarse_dir},
                               {"patch_size", patch_size},
                               {"margin", margin}});
    std::cout << "extracted " << pairs.size() << " patch pairs";
    for (auto& [cls, n] : per_class) std::cout << " " << cls << ":" << n;
    if (stats.dropped_empty || stats.dropped_full)
        std::cout << " (dropped " << stats.dropped_empty << " empty, " << stats.dropped_full
                  << " full)";
    std::cout << "\n";
    return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(const std::string& store, const std::string& out, const std::string& config_path,
              const std::string& head, uint64_t seed, bool has_seed, int epochs, int batch,
              double lr, double threshold, bool has_threshold) {
    auto cfgfile = ConfigFile::load(config_path);
    net::ModelConfig mc = model_config_from_json_text(cfgfile.section("model"));
    train::TrainConfig tc = train_config_from_json_text(cfgfile.section("train"));
    if (!head.empty()) mc.head = net::head_from_name(head);
    if (has_threshold) mc.threshold = threshold;
    if (has_seed) tc.seed = seed;
    if (epochs > 0) tc.epochs = epochs;
    if (batch > 0) tc.batch_size = batch;
    if (lr > 0) tc.lr = lr;
    mc.validate();
    tc.validate();

    auto pairs = data::read_patch_store(store);
    if (!pairs.empty() && pairs[0].placement.patch_size != mc.input_size)
        throw ValidationError("store patch size " +
                              std::to_string(pairs[0].placement.patch_size) +
                              " does not match model input_size " +
                              std::to_string(mc.input_size));
    write_resolved_config(out, "train",
                          json{{"store", store}, {"model", model_json(mc)},
                               {"train", train_json(tc)}});
    auto res = train::train(pairs, mc, tc, out);
    std::cout << "trained " << res.epochs_run << " epochs, best val IoU "
              << res.best_val_iou;
    if (res.diverged) std::cout << " (diverged, last finite checkpoint kept)";
    if (res.early_stopped) std::cout << " (early stop)";
    std::cout << "\nbest: " << res.best_checkpoint.string()
              << "\nfinal: " << res.final_checkpoint.string() << "\n";
    return 0;
}

// ------------------------------------------------------- shared eval pieces

struct CoarseSource {
    std::string dir;        // pre-simulated sidecars
    sim::SimConfig sc;      // or on-the-fly simulation
    bool simulate = false;

    std::optional<sim::CoarseMask> get(const std::string& image_id, const std::string& cls,
                                       const Mask& fine) const {
        if (simulate) {
            if (fine.empty_fg()) return std::nullopt;
            return sim::simulate_coarse_mask(fine, sc);
        }
        auto base = fs::path(dir) / (image_id + "__" + cls + ".png");
        if (!fs::exists(base)) return std::nullopt;
        return refine::load_coarse(dir, image_id, cls);
    }
};

std::unique_ptr<net::RefineNet> load_net(const std::string& ckpt_path,
                                         const std::string& head_override,
                                         net::HeadKind* head_out, double* tau_out) {
    net::ModelConfig cfg = net::peek_checkpoint_config(ckpt_path);
    auto net = std::make_unique<net::RefineNet>(cfg, 0);
    net::load_checkpoint(*net, ckpt_path);
    *head_out = head_override.empty() ? cfg.head : net::head_from_name(head_override);
    if (*tau_out <= 0) *tau_out = cfg.threshold;
    return net;
}

// ------------------------------------------------------------------ refine

int cmd_refine(const std::string& manifest_path, const std::string& coarse_dir,
               const std::string& ckpt, const std::string& out, const std::string& head,
               double threshold) {
    auto manifest = data::load_manifest(manifest_path);
    net::HeadKind hk;
    double tau = threshold;
    auto net = load_net(ckpt, head, &hk, &tau);

    int n = 0;
    for (const auto& rec : manifest.images) {
        ImageU16 image = load_image_rgb(rec.image);
        for (const auto& [cls, mask_path] : rec.masks) {
            Mask fine = load_mask(mask_path);
            CoarseSource src;
            src.dir = coarse_dir;
            auto cm = src.get(rec.id, cls, fine);
            if (!cm || cm->ellipses.empty()) continue;
            auto rr = refine::refine_image(image, *cm, *net, hk, tau,
                                           net->config().input_size, 0.2);
            // mirror the manifest's mask layout under out/
            fs::path rel = fs::relative(mask_path, manifest.root);
            fs::path dst = fs::path(out) / rel;
            fs::create_directories(dst.parent_path());
            save_mask_png(rr.refined, dst);
            ++n;
        }
    }
    write_resolved_config(out, "refine",
                          json{{"manifest", manifest_path},
                               {"coarse", coarse_dir},
                               {"checkpoint", ckpt},
                               {"head", net::head_name(hk)},
                               {"threshold", tau},
                               {"model", model_json(net->config())}});
    std::cout << "refined " << n << " image/class masks into " << out << "\n";
    return 0;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const std::string& manifest_path, const std::string& ckpt, const std::string& out,
             const std::string& coarse_dir, double reduction, const std::string& config_path,
             const std::string& head, double threshold, uint64_t seed, bool has_seed) {
    auto cfgfile = ConfigFile::load(config_path);
    auto manifest = data::load_manifest(manifest_path);

    net::HeadKind hk;
    double tau = threshold;
    auto net = load_net(ckpt, head, &hk, &tau);
    if (cfgfile.j.contains("model")) {
        auto requested = model_config_from_json_text(cfgfile.section("model"));
        if (!requested.same_shape(net->config()))
            throw ValidationError(
                "checkpoint shape mismatch: config file model dimensions differ from the "
                "checkpoint");
    }

    CoarseSource src;
    if (!coarse_dir.empty()) {
        src.dir = coarse_dir;
    } else {
        src.simulate = true;
        src.sc = sim_config_from_json_text(cfgfile.section("sim"));
        src.sc.reduction_factor = reduction;
        if (has_seed) src.sc.seed = seed;
    }

    std::vector<refine::ImageScore> refined_scores, coarse_scores;
    for (const auto& rec : manifest.images) {
        ImageU16 image = load_image_rgb(rec.image);
        for (const auto& [cls, mask_path] : rec.masks) {
            Mask fine = load_mask(mask_path);
            auto cm = src.get(rec.id, cls, fine);
            if (!cm || cm->ellipses.empty()) continue;
            auto rr = refine::refine_image(image, *cm, *net, hk, tau,
                                           net->config().input_size, 0.2);
            refined_scores.push_back({rec.id, cls, refine::image_iou(rr.refined, fine)});
            coarse_scores.push_back({rec.id, cls, refine::image_iou(cm->raster, fine)});
        }
    }
    std::string cfg_text = to_json_text(net->config());
    std::string fingerprint = to_hex(fnv1a64(cfg_text.data(), cfg_text.size()));
    auto rep = refine::aggregate_scores(refined_scores, manifest.classes, fingerprint);
    auto coarse_rep = refine::aggregate_scores(coarse_scores, manifest.classes, fingerprint);

    fs::create_directories(out);
    refine::write_eval_report_json(rep, fs::path(out) / "report.json");
    refine::write_eval_report_csv(rep, fs::path(out) / "report.csv");
    refine::write_eval_report_json(coarse_rep, fs::path(out) / "initial_coarse.json");
    write_resolved_config(out, "eval",
                          json{{"manifest", manifest_path},
                               {"checkpoint", ckpt},
                               {"head", net::head_name(hk)},
                               {"threshold", tau},
                               {"model", model_json(net->config())},
                               {"coarse",
                                coarse_dir.empty() ? json(sim_json(src.sc)) : json(coarse_dir)}});
    std::cout << "evaluated " << refined_scores.size() << " image/class pairs\n";
    for (const auto& [cls, cs] : rep.per_class) {
        if (!cs.applicable) {
            std::cout << "  " << cls << ": n/a\n";
            continue;
        }
        std::cout << "  " << cls << ": refined IoU " << cs.mean_iou << " (std " << cs.std_iou
                  << ", n " << cs.n_images << "), initial coarse "
                  << coarse_rep.per_class.at(cls).mean_iou << "\n";
    }
    std::cout << "  average: refined " << rep.average << ", initial coarse "
              << coarse_rep.average << "\n";
    return 0;
}

// ------------------------------------------------------------------- sweep

int cmd_sweep(const std::string& manifest_path, const std::vector<std::string>& ckpts,
              const std::string& out, const std::string& factors_csv,
              const std::string& config_path, double threshold, uint64_t seed, bool has_seed) {
    auto cfgfile = ConfigFile::load(config_path);
    auto manifest = data::load_manifest(manifest_path);

    refine::SweepSpec spec;
    spec.sim = sim_config_from_json_text(cfgfile.section("sim"));
    if (has_seed) spec.sim.seed = seed;
    if (!factors_csv.empty()) {
        spec.factors.clear();
        std::stringstream ss(factors_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) spec.factors.push_back(std::stod(tok));
        if (spec.factors.empty()) throw ValidationError("sweep: empty factor list");
    }

    std::vector<std::unique_ptr<net::RefineNet>> nets;
    std::map<std::string, net::RefineNet*> heads;
    for (const auto& c : ckpts) {
        net::HeadKind hk;
        double tau = threshold;
        nets.push_back(load_net(c, "", &hk, &tau));
        std::string name = net::head_name(hk);
        while (heads.count(name)) name += "'";
        heads[name] = nets.back().get();
        spec.patch_size = nets.back()->config().input_size;
        spec.tau = tau;
    }
    if (threshold > 0) spec.tau = threshold;

    auto rows = refine::reduction_sweep(manifest, heads, spec);
    fs::create_directories(out);
    refine::write_sweep_csv(rows, fs::path(out) / "sweep.csv");
    refine::plot_sweep(rows, fs::path(out) / "sweep.png");
    write_resolved_config(out, "sweep",
                          json{{"manifest", manifest_path},
                               {"checkpoints", ckpts},
                               {"factors", spec.factors},
                               {"threshold", spec.tau},
                               {"sim", sim_json(spec.sim)}});
    std::cout << "sweep wrote " << rows.size() << " rows to " << out << "\n";
    return 0;
}

// ----------------------------------------------------------------- overlay

int cmd_overlay(const std::string& manifest_path, const std::string& image_id,
                const std::string& cls, const std::string& coarse_dir, const std::string& ckpt,
                const std::string& out_file, const std::string& head, double threshold,
                bool superpixels) {
    auto manifest = data::load_manifest(manifest_path);
    const data::ImageRecord* rec = nullptr;
    for (const auto& r : manifest.images)
        if (r.id == image_id) rec = &r;
    if (!rec) throw ValidationError("overlay: image id not in manifest: " + image_id);
    if (!rec->masks.count(cls))
        throw ValidationError("overlay: class " + cls + " not present for image " + image_id);

    ImageU16 image = load_image_rgb(rec->image);
    Mask fine = load_mask(rec->masks.at(cls));
    auto cm = refine::load_coarse(coarse_dir, image_id, cls);

    Mask refined(image.h, image.w);
    std::optional<Mask> sp_bounds;
    if (!ckpt.empty()) {
        net::HeadKind hk;
        double tau = threshold;
        auto net = load_net(ckpt, head, &hk, &tau);
        auto rr = refine::refine_image(image, cm, *net, hk, tau, net->config().input_size, 0.2);
        refined = rr.refined;
        if (superpixels) {
            // stride-4 superpixel boundaries of each patch, projected back
            Mask acc(image.h, image.w);
            const int ps = net->config().input_size;
            for (const auto& e : cm.ellipses) {
                RectI rect = data::compute_crop_rect(e, image.h, image.w, 0.2);
                ImageU16 patch = resize_bilinear(crop(image, rect), ps, ps);
                Mask cpatch = resize_nearest(crop(cm.raster, rect), ps, ps);
                if (cpatch.empty_fg()) continue;
                auto outp = net->forward(patch, cpatch, net::HeadKind::PrototypicalSuperpixel,
                                         false, false);
                if (outp.degenerate || !outp.labeling) continue;
                Mask edges(ps / 4, ps / 4);
                const auto& lab = *outp.labeling;
                for (int y = 0; y < lab.h; ++y)
                    for (int x = 0; x < lab.w; ++x) {
                        int32_t l = lab.at(y, x);
                        if (l < 0) continue;
                        bool edge = false;
                        if (y + 1 < lab.h && lab.at(y + 1, x) != l) edge = true;
                        if (x + 1 < lab.w && lab.at(y, x + 1) != l) edge = true;
                        edges.at(y, x) = edge;
                    }
                Mask up = resize_nearest(edges, rect.h, rect.w);
                for (int y = 0; y < rect.h; ++y)
                    for (int x = 0; x < rect.w; ++x)
                        if (up.at(y, x)) acc.at(rect.y + y, rect.x + x) = 1;
            }
            sp_bounds = acc;
        }
    }
    refine::render_overlay(image, cm.raster, refined, fine, sp_bounds, out_file);
    fs::path cfg_dir = fs::path(out_file).parent_path();
    if (cfg_dir.empty()) cfg_dir = ".";
    write_resolved_config(cfg_dir, "overlay",
                          json{{"manifest", manifest_path},
                               {"image_id", image_id},
                               {"class", cls},
                               {"checkpoint", ckpt},
                               {"out", out_file}});
    std::cout << "overlay written to " << out_file << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coarse retinal lesion annotation refinement toolkit"};
    app.require_subcommand(1);

    std::string manifest, out, config_path, coarse_dir, store, ckpt, head, image_id, cls,
        factors;
    std::vector<std::string> ckpts;
    double reduction = 1.0, margin = 0.2, threshold = -1.0, lr = -1.0;
    uint64_t seed = 0;
    int patch_size = 256, epochs = -1, batch = -1;
    bool superpixels = false;

    auto* sim_cmd = app.add_subcommand("simulate", "simulate coarse ellipse annotations");
    sim_cmd->add_option("--manifest", manifest)->required();
    sim_cmd->add_option("--out", out)->required();
    sim_cmd->add_option("--config", config_path);
    sim_cmd->add_option("--reduction-factor", reduction);
    auto* sim_seed = sim_cmd->add_option("--seed", seed);

    auto* ext_cmd = app.add_subcommand("extract", "extract patch pairs around ellipses");
    ext_cmd->add_option("--manifest", manifest)->required();
    ext_cmd->add_option("--coarse", coarse_dir)->required();
    ext_cmd->add_option("--out", out)->required();
    ext_cmd->add_option("--patch-size", patch_size);
    ext_cmd->add_option("--margin", margin);

    auto* train_cmd = app.add_subcommand("train", "train the refinement model");
    train_cmd->add_option("--store", store)->required();
    train_cmd->add_option("--out", out)->required();
    train_cmd->add_option("--config", config_path);
    train_cmd->add_option("--head", head)->check(CLI::IsMember({"proto", "proto-sp", "baseline"}));
    auto* train_seed = train_cmd->add_option("--seed", seed);
    train_cmd->add_option("--epochs", epochs);
    train_cmd->add_option("--batch-size", batch);
    train_cmd->add_option("--lr", lr);
    auto* train_tau = train_cmd->add_option("--threshold", threshold);

    auto* ref_cmd = app.add_subcommand("refine", "refine full images with a checkpoint");
    ref_cmd->add_option("--manifest", manifest)->required();
    ref_cmd->add_option("--coarse", coarse_dir)->required();
    ref_cmd->add_option("--checkpoint", ckpt)->required();
    ref_cmd->add_option("--out", out)->required();
    ref_cmd->add_option("--head", head)->check(CLI::IsMember({"proto", "proto-sp", "baseline"}));
    ref_cmd->add_option("--threshold", threshold);

    auto* eval_cmd = app.add_subcommand("eval", "refine and score against ground truth");
    eval_cmd->add_option("--manifest", manifest)->required();
    eval_cmd->add_option("--checkpoint", ckpt)->required();
    eval_cmd->add_option("--out", out)->required();
    eval_cmd->add_option("--coarse", coarse_dir);
    eval_cmd->add_option("--reduction-factor", reduction);
    eval_cmd->add_option("--config", config_path);
    eval_cmd->add_option("--head", head)->check(CLI::IsMember({"proto", "proto-sp", "baseline"}));
    eval_cmd->add_option("--threshold", threshold);
    auto* eval_seed = eval_cmd->add_option("--seed", seed);

    auto* sweep_cmd = app.add_subcommand("sweep", "reduction-factor sweep");
    sweep_cmd->add_option("--manifest", manifest)->required();
    sweep_cmd->add_option("--checkpoint", ckpts)->required();
    sweep_cmd->add_option("--out", out)->required();
    sweep_cmd->add_option("--factors", factors);
    sweep_cmd->add_option("--config", config_path);
    sweep_cmd->add_option("--threshold", threshold);
    auto* sweep_seed = sweep_cmd->add_option("--seed", seed);

    auto* ovl_cmd = app.add_subcommand("overlay", "render a boundary overlay");
    ovl_cmd->add_option("--manifest", manifest)->required();
    ovl_cmd->add_option("--image-id", image_id)->required();
    ovl_cmd->add_option("--class", cls)->required();
    ovl_cmd->add_option("--coarse", coarse_dir)->required();
    ovl_cmd->add_option("--out", out)->required();
    ovl_cmd->add_option("--checkpoint", ckpt);
    ovl_cmd->add_option("--head", head)->check(CLI::IsMember({"proto", "proto-sp", "baseline"}));
    ovl_cmd->add_option("--threshold", threshold);
    ovl_cmd->add_flag("--superpixels", superpixels);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\nrun with --help for usage\n";
        return 1;
    }

    try {
        if (sim_cmd->parsed())
            return cmd_simulate(manifest, out, config_path, reduction, seed,
                                sim_seed->count() > 0);
        if (ext_cmd->parsed())
            return cmd_extract(manifest, coarse_dir, out, patch_size, margin);
        if (train_cmd->parsed())
            return cmd_train(store, out, config_path, head, seed, train_seed->count() > 0,
                             epochs, batch, lr, threshold, train_tau->count() > 0);
        if (ref_cmd->parsed())
            return cmd_refine(manifest, coarse_dir, ckpt, out, head, threshold);
        if (eval_cmd->parsed())
            return cmd_eval(manifest, ckpt, out, coarse_dir, reduction, config_path, head,
                            threshold, seed, eval_seed->count() > 0);
        if (sweep_cmd->parsed())
            return cmd_sweep(manifest, ckpts, out, factors, config_path, threshold, seed,
                             sweep_seed->count() > 0);
        if (ovl_cmd->parsed())
            return cmd_overlay(manifest, image_id, cls, coarse_dir, ckpt, out, head, threshold,
                               superpixels);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
