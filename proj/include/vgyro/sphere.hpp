#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vgyro/error.hpp"

namespace vgyro {

// Unit 3-vector on S2. Camera frame: x forward, y left, z up.
using Direction = Eigen::Vector3d;

inline constexpr double kUnitNormTol = 1e-9;

inline bool is_unit(const Direction& d, double tol = kUnitNormTol) {
    return std::abs(d.norm() - 1.0) <= tol;
}

inline double deg2rad(double d) { return d * M_PI / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / M_PI; }

// Wraps an angle into [-pi, pi).
double wrap_pi(double a);

struct EulerRPY {
    double roll = 0.0;   // about x, radians
    double pitch = 0.0;  // about y, radians
    double yaw = 0.0;    // about z, radians
};

// 3x3 orthonormal matrix with det +1. Column-major Eigen storage;
// acts camera-to-world: d_world = R * d_camera.
class RotationSO3 {
public:
    RotationSO3() : m_(Eigen::Matrix3d::Identity()) {}

    static RotationSO3 identity() { return RotationSO3(); }
    static RotationSO3 rot_x(double a);
    static RotationSO3 rot_y(double a);
    static RotationSO3 rot_z(double a);
    // R = Rz(yaw) * Ry(pitch) * Rx(roll)
    static RotationSO3 from_rpy(const EulerRPY& e);
    static RotationSO3 from_rpy(double roll, double pitch, double yaw) {
        return from_rpy(EulerRPY{roll, pitch, yaw});
    }
    // Rodrigues exponential of axis*angle.
    static RotationSO3 exp(const Eigen::Vector3d& omega);
    // Validates orthonormality and det +1 within 1e-9.
    static RotationSO3 from_matrix(const Eigen::Matrix3d& m);

    const Eigen::Matrix3d& matrix() const { return m_; }
    RotationSO3 transposed() const { return RotationSO3(m_.transpose(), unchecked{}); }

    Direction operator*(const Direction& d) const { return m_ * d; }
    RotationSO3 operator*(const RotationSO3& o) const {
        return RotationSO3(m_ * o.m_, unchecked{});
    }

    // Inverse of from_rpy away from gimbal lock; at |pitch| = pi/2 sets
    // roll = 0 and folds the free angle into yaw.
    EulerRPY to_rpy() const;

    bool is_valid(double tol = kUnitNormTol) const;

private:
    struct unchecked {};
    RotationSO3(const Eigen::Matrix3d& m, unchecked) : m_(m) {}
    Eigen::Matrix3d m_;
};

// Geodesic distance on SO(3): arccos(clamp((trace(Ra*Rb^T) - 1)/2, -1, 1)).
double geodesic_angle(const RotationSO3& ra, const RotationSO3& rb);

// --- Equirectangular mapping ------------------------------------------------
//
// Pixel centers sit at (u+0.5, v+0.5); row v=0 is the top of the image
// (theta -> +pi/2, i.e. up). Longitude phi = 2*pi*(u+0.5)/W - pi,
// latitude theta = pi/2 - pi*(v+0.5)/H.

struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

// Throws "invalid-dimensions" when W != 2H.
Direction equirect_to_direction(double u, double v, int width, int height);

// Inverse mapping; u wrapped into [0, W), v clamped into [0, H).
// At the poles u follows the atan2(y, x) convention.
PixelCoord direction_to_equirect(const Direction& d, int width, int height);

// Unchecked fast path of direction_to_equirect for inner loops; the caller
// guarantees W = 2H and a unit direction.
inline void project_equirect(const Direction& d, int width, int height, double& u,
                             double& v) {
    const double phi = std::atan2(d.y(), d.x());
    const double theta = std::asin(std::clamp(d.z(), -1.0, 1.0));
    u = (phi + M_PI) * width / (2.0 * M_PI) - 0.5;
    if (u < 0.0) u += width;
    if (u >= width) u -= width;
    v = (M_PI / 2.0 - theta) * height / M_PI - 0.5;
    if (v < 0.0) v = 0.0;
}

// --- Icosphere ---------------------------------------------------------------

// Icosahedron subdivided `level` times: 10*4^n + 2 vertices, 20*4^n faces,
// all vertices unit norm. Vertices of level n-1 form a prefix of level n.
struct IcosphereGrid {
    int level = 0;
    std::vector<Direction> vertices;
    std::vector<std::array<std::int32_t, 3>> faces;
};

// Throws "level-too-large" for n > 7.
IcosphereGrid build_icosphere(int level);

}  // namespace vgyro
