#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lesref/coarse_sim.hpp"
#include "lesref/raster.hpp"

namespace lesref::data {

struct ImageRecord {
    std::string id;
    std::filesystem::path image;                          // resolved against root
    std::map<std::string, std::filesystem::path> masks;   // lesion class -> fine mask
};

struct DatasetManifest {
    std::filesystem::path root;
    std::string split;
    std::vector<std::string> classes;
    std::vector<ImageRecord> images;
};

// Reads and validates a manifest JSON document:
//   {root, split, classes:[...], images:[{id, image, masks:{class: path}}]}
// Paths are relative to `root`, which itself resolves against the manifest's
// directory. All referenced files must exist.
DatasetManifest load_manifest(const std::filesystem::path& path);

struct Placement {
    std::string pair_id;
    std::string image_id;
    std::string lesion_class;
    RectI rect;  // pre-resize crop rectangle in source coordinates
    int source_h = 0, source_w = 0;
    int patch_size = 0;

    bool operator==(const Placement&) const = default;
};

struct PatchPair {
    ImageU16 image;  // patch_size x patch_size, unit-interval intensities
    Mask coarse;
    Mask gt;
    Placement placement;
};

struct ExtractStats {
    int dropped_empty = 0;  // coarse crop became empty after resize
    int dropped_full = 0;   // coarse crop covers the whole patch
};

// Ellipse bounding box grown by `margin` per side, squared up by extending the
// shorter side, translated (not shrunk) into image bounds where possible.
RectI compute_crop_rect(const sim::EllipseParams& e, int img_h, int img_w, double margin);

std::vector<PatchPair> extract_patch_pairs(const ImageU16& image, const Mask& fine,
                                           const sim::CoarseMask& coarse,
                                           const std::string& image_id,
                                           const std::string& lesion_class, int patch_size,
                                           double margin, ExtractStats* stats = nullptr);

// Patch store: per pair {id}.img.png / {id}.coarse.png / {id}.gt.png / {id}.json
// plus index.json with counts and checksums. Writing resumes over valid
// existing pairs; reading verifies every checksum.
void write_patch_store(const std::vector<PatchPair>& pairs, const std::filesystem::path& dir);
std::vector<PatchPair> read_patch_store(const std::filesystem::path& dir);

uint64_t pair_checksum(const PatchPair& p);

}  // namespace lesref::data
