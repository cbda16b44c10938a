#pragma once

#include <vector>

#include "vgyro/image.hpp"
#include "vgyro/sphere.hpp"

namespace vgyro {

// Per-vertex image brightness on a (default level-5) icosphere.
struct SphericalBrightness {
    IcosphereGrid grid;
    std::vector<double> values;
};

// value_k = sample_bilinear(img, direction_to_equirect(R^T x_k)), i.e. the
// vertex view of the image content rotated by R.
SphericalBrightness sample_spherical(const EquirectImage& img,
                                     const IcosphereGrid& grid,
                                     const RotationSO3& r);

// Gradient of d -> img(proj(d)) at d = R^T x, as a 3-vector tangent to the
// sphere at that point. Derivative of the bilinear interpolant chained with
// the projection Jacobian; zero within 1 px of a pole.
Eigen::Vector3d spherical_gradient(const EquirectImage& img, const Direction& x,
                                   const RotationSO3& r);

struct RefineConfig {
    int level = 5;
    int max_iters = 100;
    double step_tol = 1e-6;  // rad
};

struct RefineResult {
    RotationSO3 rotation;
    double final_cost = 0.0;
    double initial_cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Levenberg-Marquardt over SO(3) (left-multiplicative tangent updates) on
// C(R) = sum_k (ref(x_k) - cur(R x_k))^2 across the grid vertices.
// Throws "dimensions-mismatch" when the images disagree.
RefineResult refine_rotation(const EquirectImage& ref, const EquirectImage& cur,
                             const RotationSO3& r0, const RefineConfig& cfg = {});

// Variant reusing a prebuilt grid (must match cfg-level vertex count).
RefineResult refine_rotation(const EquirectImage& ref, const EquirectImage& cur,
                             const RotationSO3& r0, const RefineConfig& cfg,
                             const IcosphereGrid& grid);

// Runs `iterations` Jacobian-assembly + trial-step rounds on a prebuilt
// working set (the steady-state cost of one LM iteration); exposed for the
// runtime comparison against the MPP cost. Returns the last trial cost.
double refine_iteration_probe(const EquirectImage& ref, const EquirectImage& cur,
                              const RotationSO3& r, const IcosphereGrid& grid,
                              int iterations = 1);

}  // namespace vgyro
