#include "vgyro/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace vgyro {

double wrap_pi(double a) {
    double w = std::fmod(a + M_PI, 2.0 * M_PI);
    if (w < 0.0) w += 2.0 * M_PI;
    return w - M_PI;
}

RotationSO3 RotationSO3::rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << 1, 0, 0,
         0, c, -s,
         0, s, c;
    return RotationSO3(m, unchecked{});
}

RotationSO3 RotationSO3::rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << c, 0, s,
         0, 1, 0,
        -s, 0, c;
    return RotationSO3(m, unchecked{});
}

RotationSO3 RotationSO3::rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << c, -s, 0,
         s, c, 0,
         0, 0, 1;
    return RotationSO3(m, unchecked{});
}

RotationSO3 RotationSO3::from_rpy(const EulerRPY& e) {
    return rot_z(e.yaw) * rot_y(e.pitch) * rot_x(e.roll);
}

RotationSO3 RotationSO3::exp(const Eigen::Vector3d& omega) {
    const double angle = omega.norm();
    if (angle < 1e-14) {
        Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
        m(0, 1) = -omega.z(); m(1, 0) = omega.z();
        m(0, 2) = omega.y();  m(2, 0) = -omega.y();
        m(1, 2) = -omega.x(); m(2, 1) = omega.x();
        return from_matrix(m.householderQr().householderQ());
    }
    const Eigen::Vector3d axis = omega / angle;
    Eigen::Matrix3d k;
    k << 0, -axis.z(), axis.y(),
         axis.z(), 0, -axis.x(),
        -axis.y(), axis.x(), 0;
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity() + std::sin(angle) * k +
                        (1.0 - std::cos(angle)) * (k * k);
    return RotationSO3(m, unchecked{});
}

RotationSO3 RotationSO3::from_matrix(const Eigen::Matrix3d& m) {
    RotationSO3 r(m, unchecked{});
    if (!r.is_valid()) {
        throw Error("invalid-rotation",
                    "matrix is not orthonormal with det +1 within 1e-9");
    }
    return r;
}

bool RotationSO3::is_valid(double tol) const {
    const Eigen::Matrix3d mtm = m_.transpose() * m_;
    if ((mtm - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(m_.determinant() - 1.0) <= tol;
}

EulerRPY RotationSO3::to_rpy() const {
    EulerRPY e;
    const double sp = -m_(2, 0);
    if (std::abs(sp) >= 1.0 - 1e-12) {
        // Gimbal lock: roll := 0, remaining freedom folded into yaw.
        e.pitch = (sp > 0) ? M_PI / 2.0 : -M_PI / 2.0;
        e.roll = 0.0;
        e.yaw = wrap_pi(std::atan2(-m_(0, 1), m_(1, 1)));
        return e;
    }
    e.pitch = std::asin(sp);
    e.roll = wrap_pi(std::atan2(m_(2, 1), m_(2, 2)));
    e.yaw = wrap_pi(std::atan2(m_(1, 0), m_(0, 0)));
    return e;
}

double geodesic_angle(const RotationSO3& ra, const RotationSO3& rb) {
    const Eigen::Matrix3d m = ra.matrix() * rb.matrix().transpose();
    // Same angle as acos((trace - 1)/2) but conditioned near 0 and pi:
    // atan2 of the skew-part norm (= 2 sin) against trace - 1 (= 2 cos).
    const Eigen::Vector3d skew(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0),
                               m(1, 0) - m(0, 1));
    return std::atan2(0.5 * skew.norm(), 0.5 * (m.trace() - 1.0));
}

Direction equirect_to_direction(double u, double v, int width, int height) {
    if (width != 2 * height) {
        throw Error("invalid-dimensions", "equirectangular image requires W = 2H");
    }
    const double phi = 2.0 * M_PI * (u + 0.5) / width - M_PI;
    const double theta = M_PI / 2.0 - M_PI * (v + 0.5) / height;
    const double ct = std::cos(theta);
    return Direction(ct * std::cos(phi), ct * std::sin(phi), std::sin(theta));
}

PixelCoord direction_to_equirect(const Direction& d, int width, int height) {
    if (width != 2 * height) {
        throw Error("invalid-dimensions", "equirectangular image requires W = 2H");
    }
    PixelCoord pc;
    project_equirect(d, width, height, pc.u, pc.v);
    return pc;
}

namespace {

// Midpoint subdivision step; parent vertices keep their indices so each
// level's vertex list is a prefix of the next.
void subdivide(IcosphereGrid& g) {
    std::map<std::pair<std::int32_t, std::int32_t>, std::int32_t> midpoint;
    auto mid = [&](std::int32_t a, std::int32_t b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const Direction m = (g.vertices[a] + g.vertices[b]).normalized();
        const std::int32_t idx = static_cast<std::int32_t>(g.vertices.size());
        g.vertices.push_back(m);
        midpoint.emplace(key, idx);
        return idx;
    };

    std::vector<std::array<std::int32_t, 3>> faces;
    faces.reserve(g.faces.size() * 4);
    for (const auto& f : g.faces) {
        const std::int32_t ab = mid(f[0], f[1]);
        const std::int32_t bc = mid(f[1], f[2]);
        const std::int32_t ca = mid(f[2], f[0]);
        faces.push_back({f[0], ab, ca});
        faces.push_back({f[1], bc, ab});
        faces.push_back({f[2], ca, bc});
        faces.push_back({ab, bc, ca});
    }
    g.faces = std::move(faces);
}

}  // namespace

IcosphereGrid build_icosphere(int level) {
    if (level < 0 || level > 7) {
        throw Error("level-too-large", "icosphere level must be in [0, 7]");
    }

    IcosphereGrid g;
    g.level = level;

    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    const double s = std::sqrt(1.0 + t * t);
    const double a = 1.0 / s, b = t / s;

    g.vertices = {
        {-a, b, 0}, {a, b, 0}, {-a, -b, 0}, {a, -b, 0},
        {0, -a, b}, {0, a, b}, {0, -a, -b}, {0, a, -b},
        {b, 0, -a}, {b, 0, a}, {-b, 0, -a}, {-b, 0, a},
    };
    g.faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };

    for (int i = 0; i < level; ++i) subdivide(g);
    return g;
}

}  // namespace vgyro
