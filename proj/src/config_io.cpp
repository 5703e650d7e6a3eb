#include "lesref/config_io.hpp"

#include <json.hpp>

namespace lesref {

using nlohmann::json;

std::string to_json_text(const net::ModelConfig& c) {
    json j{{"input_size", c.input_size},
           {"depth", c.depth},
           {"base_width", c.base_width},
           {"feature_channels", c.feature_channels},
           {"fused_channels", c.fused_channels},
           {"distance_scale", c.distance_scale},
           {"weight_scale", c.weight_scale},
           {"superpixel_count", c.superpixel_count},
           {"slic_compactness", c.slic_compactness},
           {"slic_iters", c.slic_iters},
           {"head", net::head_name(c.head)},
           {"distance", c.distance == net::DistanceKind::Cosine ? "cosine" : "sqeuclidean"},
           {"threshold", c.threshold}};
    return j.dump();
}

net::ModelConfig model_config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    net::ModelConfig c;
    c.input_size = j.value("input_size", c.input_size);
    c.depth = j.value("depth", c.depth);
    c.base_width = j.value("base_width", c.base_width);
    c.feature_channels = j.value("feature_channels", c.feature_channels);
    c.fused_channels = j.value("fused_channels", c.fused_channels);
    c.distance_scale = j.value("distance_scale", c.distance_scale);
    c.weight_scale = j.value("weight_scale", c.weight_scale);
    c.superpixel_count = j.value("superpixel_count", c.superpixel_count);
    c.slic_compactness = j.value("slic_compactness", c.slic_compactness);
    c.slic_iters = j.value("slic_iters", c.slic_iters);
    if (j.contains("head")) c.head = net::head_from_name(j["head"].get<std::string>());
    if (j.contains("distance"))
        c.distance = j["distance"].get<std::string>() == "sqeuclidean"
                         ? net::DistanceKind::SqEuclidean
                         : net::DistanceKind::Cosine;
    c.threshold = j.value("threshold", c.threshold);
    return c;
}

std::string to_json_text(const train::TrainConfig& c) {
    json j{{"batch_size", c.batch_size},
           {"epochs", c.epochs},
           {"lr", c.lr},
           {"plateau_factor", c.plateau_factor},
           {"plateau_patience", c.plateau_patience},
           {"augment_enabled", c.augment_enabled},
           {"seed", c.seed},
           {"checkpoint_every", c.checkpoint_every},
           {"val_fraction", c.val_fraction},
           {"stop_at_train_iou", c.stop_at_train_iou},
           {"aug",
            {{"p_affine", c.aug.p_affine},
             {"shift", c.aug.shift},
             {"scale", c.aug.scale},
             {"rotate_deg", c.aug.rotate_deg},
             {"p_blur", c.aug.p_blur},
             {"blur_sigma_min", c.aug.blur_sigma_min},
             {"blur_sigma_max", c.aug.blur_sigma_max},
             {"p_brightness_contrast", c.aug.p_brightness_contrast},
             {"brightness", c.aug.brightness},
             {"contrast", c.aug.contrast}}}};
    return j.dump();
}

train::TrainConfig train_config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    train::TrainConfig c;
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    c.plateau_factor = j.value("plateau_factor", c.plateau_factor);
    c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
    c.augment_enabled = j.value("augment_enabled", c.augment_enabled);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    c.stop_at_train_iou = j.value("stop_at_train_iou", c.stop_at_train_iou);
    if (j.contains("aug")) {
        const json& a = j["aug"];
        c.aug.p_affine = a.value("p_affine", c.aug.p_affine);
        c.aug.shift = a.value("shift", c.aug.shift);
        c.aug.scale = a.value("scale", c.aug.scale);
        c.aug.rotate_deg = a.value("rotate_deg", c.aug.rotate_deg);
        c.aug.p_blur = a.value("p_blur", c.aug.p_blur);
        c.aug.blur_sigma_min = a.value("blur_sigma_min", c.aug.blur_sigma_min);
        c.aug.blur_sigma_max = a.value("blur_sigma_max", c.aug.blur_sigma_max);
        c.aug.p_brightness_contrast =
            a.value("p_brightness_contrast", c.aug.p_brightness_contrast);
        c.aug.brightness = a.value("brightness", c.aug.brightness);
        c.aug.contrast = a.value("contrast", c.aug.contrast);
    }
    return c;
}

std::string to_json_text(const sim::SimConfig& c) {
    json j{{"smooth_radius", c.smooth_radius},
           {"dilate_radius", c.dilate_radius},
           {"expansion", c.expansion},
           {"min_points", c.min_points},
           {"reduction_factor", c.reduction_factor},
           {"seed", c.seed}};
    return j.dump();
}

sim::SimConfig sim_config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    sim::SimConfig c;
    c.smooth_radius = j.value("smooth_radius", c.smooth_radius);
    c.dilate_radius = j.value("dilate_radius", c.dilate_radius);
    c.expansion = j.value("expansion", c.expansion);
    c.min_points = j.value("min_points", c.min_points);
    c.reduction_factor = j.value("reduction_factor", c.reduction_factor);
    c.seed = j.value("seed", c.seed);
    return c;
}

}  // namespace lesref
