#include "lesref/protonet.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "lesref/common.hpp"
#include "lesref/config_io.hpp"

namespace lesref::net {

using nn::Var;
using nlohmann::json;

std::string head_name(HeadKind h) {
    switch (h) {
        case HeadKind::Prototypical: return "proto";
        case HeadKind::PrototypicalSuperpixel: return "proto-sp";
        case HeadKind::Baseline: return "baseline";
    }
    return "proto";
}

HeadKind head_from_name(const std::string& s) {
    if (s == "proto") return HeadKind::Prototypical;
    if (s == "proto-sp") return HeadKind::PrototypicalSuperpixel;
    if (s == "baseline") return HeadKind::Baseline;
    throw ValidationError("unknown head: " + s + " (expected proto|proto-sp|baseline)");
}

void ModelConfig::validate() const {
    if (depth < 2) throw ValidationError("model config: depth must be >= 2");
    if (input_size < 8 || input_size % (1 << depth) != 0)
        throw ValidationError("model config: input_size must be divisible by 2^depth");
    if (base_width < 1 || feature_channels < 1 || fused_channels < 1)
        throw ValidationError("model config: channel counts must be >= 1");
    if (distance_scale <= 0 || weight_scale <= 0)
        throw ValidationError("model config: distance/weight scales must be > 0");
    if (threshold <= 0 || threshold >= 1)
        throw ValidationError("model config: threshold must be in (0,1)");
    if (superpixel_count < 1)
        throw ValidationError("model config: superpixel_count must be >= 1");
    if (slic_iters < 1) throw ValidationError("model config: slic_iters must be >= 1");
}

bool ModelConfig::same_shape(const ModelConfig& o) const {
    return input_size == o.input_size && depth == o.depth && base_width == o.base_width &&
           feature_channels == o.feature_channels && fused_channels == o.fused_channels;
}

RefineNet::RefineNet(const ModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(init_seed);
    const int d = cfg_.depth;
    auto width = [&](int lvl) { return cfg_.base_width << lvl; };

    enc_.resize(size_t(d) * 2);
    enc_[0].build(4, width(0), 3, rng);
    enc_[1].build(width(0), width(0), 3, rng);
    for (int i = 1; i < d; ++i) {
        enc_[size_t(i) * 2].build(width(i - 1), width(i), 3, rng);
        enc_[size_t(i) * 2 + 1].build(width(i), width(i), 3, rng);
    }
    bott_.resize(2);
    bott_[0].build(width(d - 1), width(d), 3, rng);
    bott_[1].build(width(d), width(d), 3, rng);

    dec_.resize(size_t(d - 2) * 2);
    int cur = width(d);
    int di = 0;
    for (int lvl = d - 1; lvl >= 2; --lvl, ++di) {
        dec_[size_t(di) * 2].build(cur + width(lvl), width(lvl), 3, rng);
        dec_[size_t(di) * 2 + 1].build(width(lvl), width(lvl), 3, rng);
        cur = width(lvl);
    }
    feature_head_.build(cur, cfg_.feature_channels, 1, rng);
    fusion_.build(cfg_.feature_channels + 1, cfg_.fused_channels, 1, rng);
    baseline_head_.build(cfg_.fused_channels, 1, 1, rng);

    auto reg = [&](auto& block, const std::string& name) {
        block.collect(params_, name);
        block.collect_buffers(buffers_, name);
    };
    for (int i = 0; i < d; ++i) {
        reg(enc_[size_t(i) * 2], "enc" + std::to_string(i) + ".a");
        reg(enc_[size_t(i) * 2 + 1], "enc" + std::to_string(i) + ".b");
    }
    reg(bott_[0], "bott.a");
    reg(bott_[1], "bott.b");
    for (int i = 0; i < d - 2; ++i) {
        reg(dec_[size_t(i) * 2], "dec" + std::to_string(i) + ".a");
        reg(dec_[size_t(i) * 2 + 1], "dec" + std::to_string(i) + ".b");
    }
    reg(feature_head_, "feature_head");
    reg(fusion_, "fusion");
    baseline_head_.collect(params_, "baseline_head");
}

nn::Tensor RefineNet::to_input(const ImageU16& patch, const Mask& coarse) {
    const int h = patch.h, w = patch.w;
    nn::Tensor in({4, h, w});
    const int64_t hw = int64_t(h) * w;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int64_t p = int64_t(y) * w + x;
            for (int ch = 0; ch < 3; ++ch)
                in[int64_t(ch) * hw + p] = double(patch.at(y, x, ch)) / 65535.0;
            in[3 * hw + p] = coarse.at(y, x) ? 1.0 : 0.0;
        }
    return in;
}

Var RefineNet::extract_features(const nn::Tensor& input, bool training, bool update_bn) {
    if (input.ndim() != 3 || input.dim(0) != 4 || input.dim(1) != cfg_.input_size ||
        input.dim(2) != cfg_.input_size)
        throw ValidationError("extract_features: input shape mismatch");
    const int d = cfg_.depth;
    Var x = nn::make_leaf(input, false);

    std::vector<Var> skips;
    x = enc_[0].forward(x, training, update_bn);
    x = enc_[1].forward(x, training, update_bn);
    skips.push_back(x);
    for (int i = 1; i < d; ++i) {
        x = nn::ops::maxpool2(x);
        x = enc_[size_t(i) * 2].forward(x, training, update_bn);
        x = enc_[size_t(i) * 2 + 1].forward(x, training, update_bn);
        skips.push_back(x);
    }
    x = nn::ops::maxpool2(x);
    x = bott_[0].forward(x, training, update_bn);
    x = bott_[1].forward(x, training, update_bn);

    int di = 0;
    for (int lvl = d - 1; lvl >= 2; --lvl, ++di) {
        x = nn::ops::upsample2_nearest(x);
        x = nn::ops::concat_channels(x, skips[size_t(lvl)]);
        x = dec_[size_t(di) * 2].forward(x, training, update_bn);
        x = dec_[size_t(di) * 2 + 1].forward(x, training, update_bn);
    }
    return feature_head_.forward(x, training, update_bn);
}

RefineNet::Fused RefineNet::fuse_mask(const Var& features, const Mask& coarse, bool training,
                                      bool update_bn) {
    const int hp = cfg_.feature_size();
    if (features->val.ndim() != 3 || features->val.dim(1) != hp || features->val.dim(2) != hp)
        throw ValidationError("fuse_mask: feature map shape mismatch");
    Fused out;
    out.m_prime = resize_nearest(coarse, hp, hp);
    nn::Tensor mt({1, hp, hp});
    for (int64_t i = 0; i < int64_t(hp) * hp; ++i) mt[i] = out.m_prime.v[size_t(i)] ? 1.0 : 0.0;
    Var cat = nn::ops::concat_channels(features, nn::make_leaf(std::move(mt), false));
    out.fmap = fusion_.forward(cat, training, update_bn);
    return out;
}

Var RefineNet::baseline_logits(const Var& fused) const { return baseline_head_.forward(fused); }

RefineNet::Output RefineNet::forward(const ImageU16& patch, const Mask& coarse, HeadKind head,
                                     bool training, bool update_bn,
                                     const sp::SuperpixelLabeling* fixed_labeling) {
    if (patch.h != cfg_.input_size || patch.w != cfg_.input_size)
        throw ValidationError("forward: patch size mismatch");
    if (coarse.h != patch.h || coarse.w != patch.w)
        throw ValidationError("forward: coarse mask size mismatch");

    Output out;
    Var f = extract_features(to_input(patch, coarse), training, update_bn);
    Fused fu = fuse_mask(f, coarse, training, update_bn);
    out.fused = fu.fmap;
    out.m_prime = fu.m_prime;

    if (head == HeadKind::Baseline) {
        const int hp = cfg_.feature_size();
        out.prob = nn::ops::reshape(nn::ops::sigmoid(baseline_logits(fu.fmap)), {hp, hp});
        return out;
    }

    if (fu.m_prime.empty_fg() || fu.m_prime.full_fg()) {
        out.degenerate = true;  // prototypes undefined; caller applies its fallback
        return out;
    }

    Var p_bg = compute_prototype(fu.fmap, [&] {
        Mask inv(fu.m_prime.h, fu.m_prime.w);
        for (size_t i = 0; i < inv.v.size(); ++i) inv.v[i] = fu.m_prime.v[i] ? 0 : 1;
        return inv;
    }());

    Var p_fg;
    if (head == HeadKind::PrototypicalSuperpixel) {
        if (fixed_labeling) {
            out.labeling = *fixed_labeling;
        } else {
            out.labeling = sp::mask_slic(fu.fmap->val, fu.m_prime, cfg_.superpixel_count,
                                         cfg_.slic_compactness, cfg_.slic_iters);
        }
        p_fg = weighted_prototype(fu.fmap, *out.labeling, p_bg, cfg_).proto;
    } else {
        p_fg = compute_prototype(fu.fmap, fu.m_prime);
    }
    out.prob = classify_pixels(fu.fmap, p_fg, p_bg, cfg_);
    return out;
}

Var compute_prototype(const Var& fused, const Mask& region) {
    return nn::ops::masked_mean(fused, region);
}

Var distance_map(const Var& fused, const Var& proto, DistanceKind kind) {
    return kind == DistanceKind::Cosine ? nn::ops::cosine_distance_map(fused, proto)
                                        : nn::ops::sqeuclidean_distance_map(fused, proto);
}

Var classify_pixels(const Var& fused, const Var& proto_fg, const Var& proto_bg,
                    const ModelConfig& cfg) {
    if (!fused->val.all_finite())
        throw std::runtime_error("classify_pixels: non-finite feature values");
    Var dfg = distance_map(fused, proto_fg, cfg.distance);
    Var dbg = distance_map(fused, proto_bg, cfg.distance);
    return nn::ops::two_class_softmax(dfg, dbg, cfg.distance_scale);
}

WeightedPrototype weighted_prototype(const Var& fused, const sp::SuperpixelLabeling& labeling,
                                     const Var& proto_bg, const ModelConfig& cfg) {
    if (labeling.n_eff < 1) throw ValidationError("weighted_prototype: empty labeling");
    WeightedPrototype out;
    std::vector<Var> dists;
    for (int i = 0; i < labeling.n_eff; ++i) {
        Var g = compute_prototype(fused, labeling.region(i));
        out.subs.push_back(g);
        dists.push_back(nn::ops::cosine_distance_vec(g, proto_bg));
    }
    Var d = nn::ops::reshape(nn::ops::stack_rows(dists), {labeling.n_eff});
    out.weights = nn::ops::softmax_weights(d, cfg.weight_scale);
    out.proto = nn::ops::weighted_sum_rows(nn::ops::stack_rows(out.subs), out.weights);
    return out;
}

Var compute_loss(const Var& prob, const Mask& gt_at_stride) {
    return nn::ops::dice_bce_loss(prob, gt_at_stride);
}

// --- checkpoint io ---

namespace {

constexpr char kMagic[8] = {'L', 'R', 'E', 'F', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

json config_to_json(const ModelConfig& c) { return json::parse(to_json_text(c)); }

ModelConfig config_from_json(const json& j) { return model_config_from_json_text(j.dump()); }

json read_header(std::ifstream& f, const std::filesystem::path& path) {
    char magic[8];
    uint32_t version = 0, len = 0;
    f.read(magic, 8);
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&len), 4);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw ValidationError("not a checkpoint file: " + path.string());
    if (version != kVersion)
        throw ValidationError("unsupported checkpoint version in " + path.string());
    std::string hdr(len, '\0');
    f.read(hdr.data(), len);
    if (!f) throw CorruptionError("truncated checkpoint header: " + path.string());
    return json::parse(hdr);
}

}  // namespace

void save_checkpoint(const RefineNet& net, int64_t step, const std::filesystem::path& path) {
    json hdr;
    hdr["config"] = config_to_json(net.config());
    hdr["step"] = step;
    auto describe = [](const auto& items) {
        json arr = json::array();
        for (const auto& [name, t] : items) {
            json e;
            e["name"] = name;
            if constexpr (std::is_same_v<std::decay_t<decltype(t)>, nn::Var>)
                e["shape"] = t->val.shape;
            else
                e["shape"] = t->shape;
            arr.push_back(e);
        }
        return arr;
    };
    hdr["params"] = describe(net.parameters());
    hdr["buffers"] = describe(net.buffers());
    std::string hs = hdr.dump();

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write checkpoint: " + path.string());
        uint32_t version = kVersion, len = uint32_t(hs.size());
        f.write(kMagic, 8);
        f.write(reinterpret_cast<const char*>(&version), 4);
        f.write(reinterpret_cast<const char*>(&len), 4);
        f.write(hs.data(), std::streamsize(hs.size()));
        for (const auto& [name, p] : net.parameters())
            f.write(reinterpret_cast<const char*>(p->val.ptr()),
                    std::streamsize(p->val.size() * 8));
        for (const auto& [name, b] : const_cast<RefineNet&>(net).buffers())
            f.write(reinterpret_cast<const char*>(b->ptr()), std::streamsize(b->size() * 8));
        if (!f) throw std::runtime_error("checkpoint write failed: " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(RefineNet& net, const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open checkpoint: " + path.string());
    json hdr = read_header(f, path);
    Checkpoint ck;
    ck.config = config_from_json(hdr.at("config"));
    ck.step = hdr.value("step", int64_t(0));

    if (!ck.config.same_shape(net.config()))
        throw ValidationError("checkpoint shape mismatch: stored model dimensions differ from "
                              "the requested configuration (" +
                              path.string() + ")");

    auto load_into = [&](auto& items, const json& desc, const char* what) {
        if (desc.size() != items.size())
            throw ValidationError(std::string("checkpoint shape mismatch: ") + what +
                                  " count differs in " + path.string());
        for (size_t i = 0; i < items.size(); ++i) {
            auto& [name, t] = items[i];
            std::vector<int> shape = desc[i].at("shape").get<std::vector<int>>();
            nn::Tensor* dst;
            if constexpr (std::is_same_v<std::decay_t<decltype(t)>, nn::Var>)
                dst = &t->val;
            else
                dst = t;
            if (desc[i].at("name") != name || shape != dst->shape)
                throw ValidationError("checkpoint shape mismatch at " + name + " in " +
                                      path.string());
            f.read(reinterpret_cast<char*>(dst->ptr()), std::streamsize(dst->size() * 8));
        }
    };
    load_into(const_cast<nn::NamedParams&>(net.parameters()), hdr.at("params"), "parameter");
    load_into(const_cast<nn::NamedBuffers&>(net.buffers()), hdr.at("buffers"), "buffer");
    if (!f) throw CorruptionError("truncated checkpoint payload: " + path.string());
    return ck;
}

ModelConfig peek_checkpoint_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open checkpoint: " + path.string());
    return config_from_json(read_header(f, path).at("config"));
}

}  // namespace lesref::net
