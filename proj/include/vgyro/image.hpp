#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vgyro/sphere.hpp"

namespace vgyro {

// W x H panorama, W = 2H, grayscale intensity in [0,1], optional RGB planes.
struct EquirectImage {
    int width = 0;
    int height = 0;
    std::vector<double> gray;  // H*W row-major
    std::vector<double> rgb;   // empty, or H*W*3 interleaved

    bool has_color() const { return !rgb.empty(); }
    double at(int x, int y) const { return gray[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return gray[static_cast<std::size_t>(y) * width + x]; }
};

// Validated constructor: throws "invalid-dimensions" unless W = 2H, H >= 2.
EquirectImage make_equirect(int width, int height, bool with_color = false);

// Equidistant fisheye lens: r_px = radius/(fov/2) * angle-from-axis.
struct LensParams {
    double cx = 0.0;      // circle center, px
    double cy = 0.0;
    double radius = 0.0;  // circle radius at fov/2, px
    double fov_deg = 0.0; // in [180, 220]
};

struct LensPair {
    LensParams front;  // optical axis +x; image right = -y, image down = -z
    LensParams rear;   // optical axis -x; image right = +y, image down = -z
};

// Plain-text key=value file with keys front.cx, front.cy, front.radius,
// front.fov, rear.cx, rear.cy, rear.radius, rear.fov.
// Throws "lens-config" on parse/validation failure.
LensPair load_lens_config(const std::string& path);

struct DualFisheyeImage {
    int width = 0;
    int height = 0;
    std::vector<double> rgb;  // H*W*3
    LensPair lenses;
};

// intensity = 0.299 R + 0.587 G + 0.114 B. Throws "missing-color".
EquirectImage to_grayscale(const EquirectImage& img);

// Bilinear sample of the intensity channel at continuous pixel-center
// coordinates; u wraps across the longitude seam, v clamps to [0, H-1].
double sample_bilinear(const EquirectImage& img, double u, double v);

// Inverse-mapped resampling: out(d) = in(R^T d) for every output pixel
// direction d, i.e. the image content is rotated by R.
EquirectImage rotate_equirect(const EquirectImage& img, const RotationSO3& r);

// Per-direction hemisphere selection with linear blending by angular
// distance to the lens edges inside the overlap band. outW must be even.
EquirectImage dualfisheye_to_equirect(const DualFisheyeImage& df, int out_width);

// Smooth synthetic panorama: a seeded mixture of spherical blobs rescaled
// into [0.02, 0.98]. Used by the synthetic data generator and tests.
EquirectImage make_blob_panorama(std::uint64_t seed, int width, int height,
                                 int blob_count = 24);

}  // namespace vgyro
