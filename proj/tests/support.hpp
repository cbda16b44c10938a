#pragma once

// Shared test fixtures and independent oracles. Everything here stays off the
// library's implementation paths: quaternions for rotation distances, naive
// double loops for mixture sums, finite differences for derivatives.

#include <Eigen/Geometry>
#include <cmath>
#include <random>
#include <vector>

#include "vgyro/image.hpp"
#include "vgyro/sphere.hpp"

namespace testsup {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline vgyro::Direction random_direction(std::mt19937_64& g) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector3d v(n(g), n(g), n(g));
    while (v.norm() < 1e-6) v = Eigen::Vector3d(n(g), n(g), n(g));
    return v.normalized();
}

// Uniform random rotation via a normalized 4-gaussian quaternion.
inline vgyro::RotationSO3 random_rotation(std::mt19937_64& g) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(g), n(g), n(g), n(g));
    while (q.norm() < 1e-6) q = Eigen::Quaterniond(n(g), n(g), n(g), n(g));
    q.normalize();
    return vgyro::RotationSO3::from_matrix(q.toRotationMatrix());
}

inline vgyro::RotationSO3 axis_angle(const vgyro::Direction& axis, double angle) {
    return vgyro::RotationSO3::exp(axis.normalized() * angle);
}

// Quaternion-dot rotation distance: 2 * acos(|qa . qb|).
inline double quat_geodesic(const vgyro::RotationSO3& a, const vgyro::RotationSO3& b) {
    const Eigen::Quaterniond qa(a.matrix());
    const Eigen::Quaterniond qb(b.matrix());
    const double d = std::min(1.0, std::abs(qa.dot(qb)));
    return 2.0 * std::acos(d);
}

// Dense reference evaluation of the spherical Gaussian mixture (no
// truncation, plain accumulation).
inline double naive_mixture_value(const std::vector<double>& vx,
                                  const std::vector<double>& vy,
                                  const std::vector<double>& vz,
                                  const std::vector<double>& w, const double q[3],
                                  double inv_l2) {
    long double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double dot = q[0] * vx[i] + q[1] * vy[i] + q[2] * vz[i];
        acc += static_cast<long double>(w[i]) * std::exp((dot - 1.0) * inv_l2);
    }
    return static_cast<double>(acc);
}

// Forward renderer for the equidistant dual-fisheye model (the inverse of
// dualfisheye_to_equirect): fisheye pixel -> direction -> panorama sample.
// Renders a small margin beyond each circle so rim bilinear taps stay valid.
inline vgyro::DualFisheyeImage render_dualfisheye(const vgyro::EquirectImage& pano,
                                                  const vgyro::LensPair& lenses,
                                                  int width, int height) {
    using vgyro::Direction;
    vgyro::DualFisheyeImage df;
    df.width = width;
    df.height = height;
    df.lenses = lenses;
    df.rgb.assign(static_cast<std::size_t>(width) * height * 3, 0.0);

    struct Frame {
        Direction axis, right, down;
        const vgyro::LensParams* lens;
    };
    const Frame frames[2] = {
        {Direction(1, 0, 0), Direction(0, -1, 0), Direction(0, 0, -1),
         &lenses.front},
        {Direction(-1, 0, 0), Direction(0, 1, 0), Direction(0, 0, -1),
         &lenses.rear},
    };

    for (const Frame& fr : frames) {
        const double half_fov = vgyro::deg2rad(fr.lens->fov_deg) / 2.0;
        const double f = fr.lens->radius / half_fov;
        const int x0 = std::max(0, static_cast<int>(fr.lens->cx - fr.lens->radius - 3));
        const int x1 = std::min(width - 1,
                                static_cast<int>(fr.lens->cx + fr.lens->radius + 3));
        const int y0 = std::max(0, static_cast<int>(fr.lens->cy - fr.lens->radius - 3));
        const int y1 = std::min(height - 1,
                                static_cast<int>(fr.lens->cy + fr.lens->radius + 3));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - fr.lens->cx;
                const double dy = y - fr.lens->cy;
                const double r = std::sqrt(dx * dx + dy * dy);
                if (r > fr.lens->radius + 2.0) continue;
                const double theta = r / f;
                const double psi = std::atan2(dy, dx);
                const Direction d = std::cos(theta) * fr.axis +
                                    std::sin(theta) * (std::cos(psi) * fr.right +
                                                       std::sin(psi) * fr.down);
                const vgyro::PixelCoord pc =
                    vgyro::direction_to_equirect(d, pano.width, pano.height);
                const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
                const double g = vgyro::sample_bilinear(pano, pc.u, pc.v);
                df.rgb[i] = df.rgb[i + 1] = df.rgb[i + 2] = g;
            }
        }
    }
    return df;
}

}  // namespace testsup
