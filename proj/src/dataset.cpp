#include "lesref/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lesref/common.hpp"

namespace lesref::data {

using nlohmann::json;

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("manifest not found: " + path.string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw ValidationError("manifest parse error in " + path.string() + ": " + e.what());
    }

    DatasetManifest m;
    std::filesystem::path root = j.value("root", std::string("."));
    m.root = root.is_absolute() ? root : path.parent_path() / root;
    m.split = j.value("split", std::string(""));
    m.classes = j.value("classes", std::vector<std::string>{});
    if (m.classes.empty()) throw ValidationError("manifest: class list is empty");
    std::set<std::string> cls(m.classes.begin(), m.classes.end());
    if (cls.size() != m.classes.size())
        throw ValidationError("manifest: duplicate class names");

    std::set<std::string> ids;
    for (const auto& ji : j.value("images", json::array())) {
        ImageRecord r;
        r.id = ji.at("id").get<std::string>();
        if (!ids.insert(r.id).second)
            throw ValidationError("manifest: duplicate image id: " + r.id);
        r.image = m.root / ji.at("image").get<std::string>();
        if (!std::filesystem::exists(r.image))
            throw ValidationError("manifest: missing image file: " + r.image.string());
        for (const auto& [c, p] : ji.at("masks").items()) {
            if (!cls.count(c))
                throw ValidationError("manifest: unknown class '" + c + "' in image " + r.id);
            auto mp = m.root / p.get<std::string>();
            if (!std::filesystem::exists(mp))
                throw ValidationError("manifest: missing mask file: " + mp.string());
            r.masks[c] = mp;
        }
        m.images.push_back(std::move(r));
    }
    return m;
}

RectI compute_crop_rect(const sim::EllipseParams& e, int img_h, int img_w, double margin) {
    double ct = std::cos(e.theta), st = std::sin(e.theta);
    double ex = std::sqrt(e.a * e.a * ct * ct + e.b * e.b * st * st);
    double ey = std::sqrt(e.a * e.a * st * st + e.b * e.b * ct * ct);
    if (e.cx + ex < 0 || e.cx - ex > img_w - 1 || e.cy + ey < 0 || e.cy - ey > img_h - 1)
        throw ValidationError("crop: ellipse lies fully outside the image");

    double x0 = e.cx - ex - 2 * margin * ex;
    double x1 = e.cx + ex + 2 * margin * ex;
    double y0 = e.cy - ey - 2 * margin * ey;
    double y1 = e.cy + ey + 2 * margin * ey;

    int xi0 = int(std::floor(x0)), xi1 = int(std::ceil(x1)) + 1;  // exclusive
    int yi0 = int(std::floor(y0)), yi1 = int(std::ceil(y1)) + 1;
    int w = xi1 - xi0, h = yi1 - yi0;

    int side = std::max(w, h);
    xi0 -= (side - w) / 2;
    yi0 -= (side - h) / 2;
    w = h = side;

    // translate into bounds; shrink only if the image itself is smaller
    if (w > img_w) {
        xi0 = 0;
        w = img_w;
    } else {
        xi0 = std::clamp(xi0, 0, img_w - w);
    }
    if (h > img_h) {
        yi0 = 0;
        h = img_h;
    } else {
        yi0 = std::clamp(yi0, 0, img_h - h);
    }
    return {xi0, yi0, w, h};
}

std::vector<PatchPair> extract_patch_pairs(const ImageU16& image, const Mask& fine,
                                           const sim::CoarseMask& coarse,
                                           const std::string& image_id,
                                           const std::string& lesion_class, int patch_size,
                                           double margin, ExtractStats* stats) {
    if (fine.h != image.h || fine.w != image.w)
        throw ValidationError("extract: fine mask size differs from image (" + image_id + ")");
    if (coarse.raster.h != image.h || coarse.raster.w != image.w)
        throw ValidationError("extract: coarse mask size differs from image (" + image_id + ")");
    if (patch_size < 8) throw ValidationError("extract: patch size too small");

    std::vector<PatchPair> out;
    for (size_t i = 0; i < coarse.ellipses.size(); ++i) {
        RectI rect = compute_crop_rect(coarse.ellipses[i], image.h, image.w, margin);
        PatchPair p;
        p.image = resize_bilinear(crop(image, rect), patch_size, patch_size);
        p.coarse = resize_nearest(crop(coarse.raster, rect), patch_size, patch_size);
        p.gt = resize_nearest(crop(fine, rect), patch_size, patch_size);
        if (p.coarse.empty_fg()) {
            if (stats) ++stats->dropped_empty;
            continue;
        }
        if (p.coarse.full_fg()) {
            if (stats) ++stats->dropped_full;
            continue;
        }
        p.placement.pair_id = image_id + "__" + lesion_class + "__" + std::to_string(i);
        p.placement.image_id = image_id;
        p.placement.lesion_class = lesion_class;
        p.placement.rect = rect;
        p.placement.source_h = image.h;
        p.placement.source_w = image.w;
        p.placement.patch_size = patch_size;
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

json placement_to_json(const Placement& p) {
    return json{{"pair_id", p.pair_id},
                {"image_id", p.image_id},
                {"class", p.lesion_class},
                {"rect", {{"x", p.rect.x}, {"y", p.rect.y}, {"w", p.rect.w}, {"h", p.rect.h}}},
                {"source", {{"h", p.source_h}, {"w", p.source_w}}},
                {"patch_size", p.patch_size}};
}

Placement placement_from_json(const json& j) {
    Placement p;
    p.pair_id = j.at("pair_id").get<std::string>();
    p.image_id = j.at("image_id").get<std::string>();
    p.lesion_class = j.at("class").get<std::string>();
    p.rect = {j.at("rect").at("x").get<int>(), j.at("rect").at("y").get<int>(),
              j.at("rect").at("w").get<int>(), j.at("rect").at("h").get<int>()};
    p.source_h = j.at("source").at("h").get<int>();
    p.source_w = j.at("source").at("w").get<int>();
    p.patch_size = j.at("patch_size").get<int>();
    return p;
}

}  // namespace

uint64_t pair_checksum(const PatchPair& p) {
    uint64_t h = fnv1a64(p.image.v.data(), p.image.v.size() * sizeof(uint16_t));
    h = fnv1a64(p.coarse.v.data(), p.coarse.v.size(), h);
    h = fnv1a64(p.gt.v.data(), p.gt.v.size(), h);
    std::string pj = placement_to_json(p.placement).dump();
    return fnv1a64(pj.data(), pj.size(), h);
}

namespace {

PatchPair read_pair(const std::filesystem::path& dir, const std::string& id) {
    PatchPair p;
    std::ifstream pf(dir / (id + ".json"));
    if (!pf) throw CorruptionError("patch store: missing placement for pair " + id);
    p.placement = placement_from_json(json::parse(pf));
    p.image = load_image_rgb(dir / (id + ".img.png"));
    p.coarse = load_mask(dir / (id + ".coarse.png"));
    p.gt = load_mask(dir / (id + ".gt.png"));
    return p;
}

void write_pair(const std::filesystem::path& dir, const PatchPair& p) {
    const auto& id = p.placement.pair_id;
    save_image_png16(p.image, dir / (id + ".img.png"));
    save_mask_png(p.coarse, dir / (id + ".coarse.png"));
    save_mask_png(p.gt, dir / (id + ".gt.png"));
    std::ofstream pf(dir / (id + ".json"), std::ios::trunc);
    pf << placement_to_json(p.placement).dump(2) << "\n";
    if (!pf) throw std::runtime_error("patch store: write failed for pair " + id);
}

}  // namespace

void write_patch_store(const std::vector<PatchPair>& pairs, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json index;
    index["patch_size"] = pairs.empty() ? 0 : pairs[0].placement.patch_size;
    std::map<std::string, int> per_class;
    json entries = json::array();
    for (const auto& p : pairs) {
        const auto& id = p.placement.pair_id;
        uint64_t sum = pair_checksum(p);
        bool reuse = false;
        if (std::filesystem::exists(dir / (id + ".img.png")) &&
            std::filesystem::exists(dir / (id + ".coarse.png")) &&
            std::filesystem::exists(dir / (id + ".gt.png")) &&
            std::filesystem::exists(dir / (id + ".json"))) {
            try {
                reuse = pair_checksum(read_pair(dir, id)) == sum;
            } catch (const std::exception&) {
                reuse = false;  // partial or damaged, rewrite
            }
        }
        if (!reuse) write_pair(dir, p);
        entries.push_back(json{{"id", id}, {"checksum", to_hex(sum)}});
        ++per_class[p.placement.lesion_class];
    }
    index["count"] = pairs.size();
    index["per_class"] = per_class;
    index["pairs"] = entries;
    auto tmp = dir / "index.json.tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        f << index.dump(2) << "\n";
        if (!f) throw std::runtime_error("patch store: cannot write index");
    }
    std::filesystem::rename(tmp, dir / "index.json");
}

std::vector<PatchPair> read_patch_store(const std::filesystem::path& dir) {
    std::ifstream f(dir / "index.json");
    if (!f) throw ValidationError("patch store: missing index.json in " + dir.string());
    json index = json::parse(f);
    std::vector<PatchPair> out;
    for (const auto& e : index.at("pairs")) {
        std::string id = e.at("id").get<std::string>();
        PatchPair p = read_pair(dir, id);
        if (to_hex(pair_checksum(p)) != e.at("checksum").get<std::string>())
            throw CorruptionError("patch store: checksum mismatch for pair " + id);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace lesref::data
