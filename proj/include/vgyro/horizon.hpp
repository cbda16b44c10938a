#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vgyro/sphere.hpp"

namespace vgyro {

// Two-channel confidence maps matching an equirectangular frame: one for the
// horizon line, one for the vertical vanishing points. Values in [0,1].
struct HeatMapPair {
    int width = 0;
    int height = 0;
    std::vector<double> horizon;
    std::vector<double> vertical;
};

struct WeightedSpherePoint {
    Direction dir;
    double weight = 0.0;
};
using WeightedSpherePoints = std::vector<WeightedSpherePoint>;

// Great-circle plane through the sphere center; sign of the normal is chosen
// so that normal . vertical_estimate >= 0.
struct HorizonPlane {
    Direction normal = Direction(0, 0, 1);
    double inlier_ratio = 0.0;  // weighted
};

struct RansacConfig {
    int iterations = 500;
    double inlier_angle_rad = deg2rad(2.0);
    double min_inliers = 0.3;  // weighted inlier ratio
    double gate_rad = deg2rad(30.0);
    std::uint64_t seed = 0;
};

// Every pixel with confidence strictly above tau * max(grid) contributes its
// pixel-center direction, weighted by the confidence.
// Throws "empty-heatmap" when nothing passes.
WeightedSpherePoints heatmap_to_sphere(const std::vector<double>& grid, int width,
                                       int height, double tau);

// Weighted mean with antipodal folding: candidates whose dot with the running
// mean is negative are flipped; seeded with the highest-weight point. The
// result is normalized and returned with z >= 0.
// Throws "degenerate-mean" when the folded mean collapses.
Direction estimate_vertical(const WeightedSpherePoints& pts);

// 2-point RANSAC for the great circle: hypothesis normals further than
// gate_rad from v_est are discarded, inliers are points within
// inlier_angle of the plane, the winner is refit as the smallest-eigenvector
// plane of the weighted inliers (gate re-applied after refit).
// Throws "no-consensus" when no gated hypothesis reaches min_inliers.
HorizonPlane ransac_horizon_plane(const WeightedSpherePoints& pts,
                                  const Direction& v_est, const RansacConfig& cfg);

struct RollPitch {
    double roll = 0.0;
    double pitch = 0.0;
};

// Interprets n as world-up expressed in the camera frame:
// pitch = -asin(n_x), roll = atan2(n_y, n_z), so that
// from_rpy(roll, pitch, 0)^T * z == n. Throws "degenerate-down" for n ~ -z.
RollPitch rollpitch_from_normal(const Direction& n);

// Synthetic stand-in for the heat-map network: the horizon channel is a
// Gaussian band around the great circle of normal R^T z, the vertical channel
// has Gaussian blobs at +-R^T z, plus uniform noise of amplitude eta.
HeatMapPair synth_heatmaps(const RotationSO3& r, int width, int height,
                           double sigma_deg, double eta, std::uint64_t seed = 0);

struct HorizonEstimate {
    RollPitch rp;
    HorizonPlane plane;
    Direction vertical = Direction(0, 0, 1);
};

// Full stage-1 chain: vertical average, gated RANSAC plane, roll/pitch.
HorizonEstimate horizon_rollpitch(const HeatMapPair& hm, double tau,
                                  const RansacConfig& cfg);

// --- Heat-map providers -------------------------------------------------------

class HeatmapSource {
public:
    virtual ~HeatmapSource() = default;
    virtual HeatMapPair get(const std::string& frame_stem, int width, int height) = 0;
};

// Reads <stem>_horizon.png and <stem>_vertical.png (8-bit grayscale,
// confidence = pixel/255) from a directory.
class FileHeatmapSource : public HeatmapSource {
public:
    explicit FileHeatmapSource(std::string dir) : dir_(std::move(dir)) {}
    HeatMapPair get(const std::string& frame_stem, int width, int height) override;

private:
    std::string dir_;
};

// Generates heat-maps from known per-frame rotations (oracle mode).
class SyntheticHeatmapSource : public HeatmapSource {
public:
    SyntheticHeatmapSource(std::vector<std::pair<std::string, RotationSO3>> rotations,
                           double sigma_deg, double eta, std::uint64_t seed);
    HeatMapPair get(const std::string& frame_stem, int width, int height) override;

private:
    std::vector<std::pair<std::string, RotationSO3>> rotations_;
    double sigma_deg_;
    double eta_;
    std::uint64_t seed_;
};

}  // namespace vgyro
