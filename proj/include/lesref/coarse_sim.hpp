#pragma once

#include <cstdint>
#include <vector>

#include "lesref/raster.hpp"

// Simulation of coarse elliptical annotations from fine lesion masks:
// close -> dilate -> connected components -> DBSCAN on component centroids
// (eps calibrated to hit a target cluster count) -> enclosing ellipse per
// cluster -> rasterized union.
namespace lesref::sim {

struct SimConfig {
    int smooth_radius = 2;      // morphological closing radius, px
    int dilate_radius = 3;      // dilation radius, px
    double expansion = 1.3;     // scale applied to fitted ellipse axes
    int min_points = 1;         // DBSCAN core-point threshold
    double reduction_factor = 1.0;
    uint64_t seed = 0;

    void validate() const;
};

struct EllipseParams {
    double cx = 0, cy = 0;  // centre
    double a = 0, b = 0;    // semi-axes, a >= b > 0
    double theta = 0;       // rotation of the a-axis, radians in [0, pi)

    bool contains(double x, double y, double tol = 1e-9) const;
};

struct CoarseMask {
    Mask raster;
    std::vector<EllipseParams> ellipses;
};

struct PointI {
    int y = 0, x = 0;
};
using PixelSet = std::vector<PointI>;

// 8-connected components, ordered by (min-row, min-col); each set in raster
// scan order. Empty mask -> empty list.
std::vector<PixelSet> connected_components(const Mask& mask);

// Clusters component centroids with DBSCAN (neighbour iff distance <= eps);
// noise becomes singleton clusters so every component gets a cluster id.
// Returns one id per component, ids dense from 0 in order of first member.
std::vector<int> dbscan_components(const std::vector<PixelSet>& components,
                                   double eps, int min_points);

// max(1, round(n/r)) for n >= 1, else 0.
int target_cluster_count(int n_components, double reduction_factor);

struct EpsCalibration {
    double eps = 0;
    int achieved = 0;
    bool exact = false;
};

// Finds eps so that dbscan_components yields `target` clusters, searching the
// discrete set of pairwise centroid distances (the only points where the
// clustering can change). Falls back to the closest achievable count, ties
// toward larger eps.
EpsCalibration calibrate_eps(const std::vector<PixelSet>& components,
                             int target, int min_points);

// Second-central-moment ellipse scaled so every point lies inside or on it,
// then axes multiplied by `expansion`. Degenerate sets get a 2 px minor axis.
EllipseParams fit_enclosing_ellipse(const PixelSet& points, double expansion = 1.0);

Mask rasterize_ellipses(const std::vector<EllipseParams>& es, int h, int w);

CoarseMask simulate_coarse_mask(const Mask& fine_mask, const SimConfig& cfg);

}  // namespace lesref::sim
