#pragma once

#include <cstdint>
#include <vector>

#include "vgyro/horizon.hpp"
#include "vgyro/image.hpp"
#include "vgyro/sphere.hpp"

namespace vgyro {

// Spherical mixture-of-Gaussians brightness model: every icosphere vertex
// carries a lobe exp((x.v - 1)/lambda_g^2) weighted by the image intensity
// sampled at the vertex. All lobes share lambda_g.
struct MppModel {
    IcosphereGrid grid;
    std::vector<double> vx, vy, vz;  // vertex coordinates, SoA for the kernels
    std::vector<double> weights;     // in [0,1]
    double lambda_g = 0.325;
    // Lobe contributions with x.v below this are skipped (bounded truncation,
    // threshold 1e-8 of the peak). Set to -2 to disable.
    double dot_cutoff = -2.0;
};

MppModel build_mpp(const EquirectImage& img, const IcosphereGrid& grid,
                   double lambda_g);

// G(x) = sum_i w_i exp((x.v_i - 1)/lambda_g^2)
double mpp_value(const MppModel& g, const Direction& x);

// C(R) = sum_k (Gref(x_k) - Greq(R x_k))^2 over the grid vertices x_k.
// Throws "grid-mismatch" when the models disagree on level or lambda_g.
double mpp_ssd_cost(const MppModel& gref, const MppModel& greq, const RotationSO3& r);

// C(psi), dC/dpsi, d2C/dpsi2 for R(psi) = Rz(psi) Ry(pitch) Rx(roll).
struct YawCostDerivs {
    double cost = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};
YawCostDerivs mpp_yaw_cost_derivs(const MppModel& gref, const MppModel& greq,
                                  const RollPitch& rp, double psi);

struct YawEstimate {
    double yaw = 0.0;  // in [-pi, pi)
    double final_cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct YawOptions {
    bool multistart = false;  // add starts at yaw0 + {90, 180, 270} deg
    int max_iters = 100;
    double step_tol = 1e-5;  // rad
};

// Damped 1-D Newton on the analytic yaw derivative, optionally multi-started.
// Never returns a cost above the one at yaw0.
YawEstimate optimize_yaw(const MppModel& gref, const MppModel& greq,
                         const RollPitch& rp, double yaw0, const YawOptions& opts = {});

}  // namespace vgyro
