#include "vgyro/horizon.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vgyro/image_io.hpp"

namespace vgyro {

WeightedSpherePoints heatmap_to_sphere(const std::vector<double>& grid, int width,
                                       int height, double tau) {
    if (width != 2 * height || grid.size() != static_cast<std::size_t>(width) * height) {
        throw Error("invalid-dimensions", "heat-map grid must be W x H with W = 2H");
    }
    const double peak = *std::max_element(grid.begin(), grid.end());
    const double cut = tau * peak;

    WeightedSpherePoints pts;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double c = grid[static_cast<std::size_t>(y) * width + x];
            if (c > cut) {
                pts.push_back({equirect_to_direction(x, y, width, height), c});
            }
        }
    }
    if (pts.empty()) throw Error("empty-heatmap", "no pixel above threshold");
    return pts;
}

Direction estimate_vertical(const WeightedSpherePoints& pts) {
    if (pts.empty()) throw Error("empty-heatmap", "no points to average");

    std::size_t seed_idx = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].weight > pts[seed_idx].weight) seed_idx = i;
    }

    Eigen::Vector3d mean = pts[seed_idx].weight * pts[seed_idx].dir;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == seed_idx) continue;
        const double s = (pts[i].dir.dot(mean) < 0.0) ? -1.0 : 1.0;
        mean += s * pts[i].weight * pts[i].dir;
    }
    const double norm = mean.norm();
    if (norm < 1e-6) throw Error("degenerate-mean", "folded weighted mean collapsed");
    Direction v = mean / norm;
    if (v.z() < 0.0) v = -v;
    return v;
}

namespace {

// Flip n into the hemisphere of v and return the angle between them.
double folded_gate_angle(Direction& n, const Direction& v) {
    if (n.dot(v) < 0.0) n = -n;
    return std::acos(std::clamp(n.dot(v), -1.0, 1.0));
}

struct Consensus {
    double weight = -1.0;
    Direction normal = Direction(0, 0, 1);
};

double weighted_inliers(const WeightedSpherePoints& pts, const Direction& n,
                        double sin_tol) {
    double w = 0.0;
    for (const auto& p : pts) {
        if (std::abs(p.dir.dot(n)) < sin_tol) w += p.weight;
    }
    return w;
}

Direction refit_normal(const WeightedSpherePoints& pts, const Direction& n,
                       double sin_tol) {
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& p : pts) {
        if (std::abs(p.dir.dot(n)) < sin_tol) {
            scatter += p.weight * p.dir * p.dir.transpose();
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
    return eig.eigenvectors().col(0).normalized();  // smallest eigenvalue
}

}  // namespace

HorizonPlane ransac_horizon_plane(const WeightedSpherePoints& pts,
                                  const Direction& v_est, const RansacConfig& cfg) {
    if (pts.size() < 2) throw Error("no-consensus", "need at least 2 points");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    const double sin_tol = std::sin(cfg.inlier_angle_rad);

    double total_weight = 0.0;
    for (const auto& p : pts) total_weight += p.weight;

    Consensus best;
    for (int it = 0; it < cfg.iterations; ++it) {
        const std::size_t i = pick(rng);
        const std::size_t j = pick(rng);
        if (i == j) continue;
        Direction n = pts[i].dir.cross(pts[j].dir);
        const double cn = n.norm();
        if (cn < 1e-9) continue;
        n /= cn;
        if (folded_gate_angle(n, v_est) > cfg.gate_rad) continue;
        const double w = weighted_inliers(pts, n, sin_tol);
        if (w > best.weight) {
            best.weight = w;
            best.normal = n;
        }
    }

    if (best.weight < 0.0) {
        throw Error("no-consensus", "no hypothesis passed the coherence gate");
    }

    Direction refined = refit_normal(pts, best.normal, sin_tol);
    if (folded_gate_angle(refined, v_est) <= cfg.gate_rad) {
        const double w = weighted_inliers(pts, refined, sin_tol);
        if (w >= best.weight) {
            best.normal = refined;
            best.weight = w;
        }
    }

    HorizonPlane plane;
    plane.normal = best.normal;
    plane.inlier_ratio = (total_weight > 0.0) ? best.weight / total_weight : 0.0;
    if (plane.inlier_ratio < cfg.min_inliers) {
        throw Error("no-consensus", "inlier ratio below minimum");
    }
    return plane;
}

RollPitch rollpitch_from_normal(const Direction& n) {
    if (n.z() <= -1.0 + 1e-9) {
        throw Error("degenerate-down", "normal points straight down");
    }
    RollPitch rp;
    rp.pitch = -std::asin(std::clamp(n.x(), -1.0, 1.0));
    rp.roll = std::atan2(n.y(), n.z());
    return rp;
}

HeatMapPair synth_heatmaps(const RotationSO3& r, int width, int height,
                           double sigma_deg, double eta, std::uint64_t seed) {
    if (width != 2 * height) {
        throw Error("invalid-dimensions", "heat-maps require W = 2H");
    }
    HeatMapPair hm;
    hm.width = width;
    hm.height = height;
    hm.horizon.resize(static_cast<std::size_t>(width) * height);
    hm.vertical.resize(hm.horizon.size());

    // Normal of the great circle as seen in the frame's own pixel space; for
    // content rotated by R this is R^T z (yaw drops out for R = Rz*Ry*Rx).
    const Direction n = r.matrix().transpose() * Direction(0, 0, 1);
    const double sigma = deg2rad(sigma_deg);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Direction d = equirect_to_direction(x, y, width, height);
            const double dot = std::clamp(d.dot(n), -1.0, 1.0);
            const double band = std::asin(dot);  // signed distance from the circle
            const double polar = std::acos(dot);

            double hconf = std::exp(-band * band * inv2s2);
            double vconf = std::exp(-polar * polar * inv2s2) +
                           std::exp(-(M_PI - polar) * (M_PI - polar) * inv2s2);
            if (eta > 0.0) {
                hconf += eta * u01(rng);
                vconf += eta * u01(rng);
            }
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            hm.horizon[i] = std::clamp(hconf, 0.0, 1.0);
            hm.vertical[i] = std::clamp(vconf, 0.0, 1.0);
        }
    }
    return hm;
}

HorizonEstimate horizon_rollpitch(const HeatMapPair& hm, double tau,
                                  const RansacConfig& cfg) {
    HorizonEstimate est;
    const auto vpts = heatmap_to_sphere(hm.vertical, hm.width, hm.height, tau);
    est.vertical = estimate_vertical(vpts);
    const auto hpts = heatmap_to_sphere(hm.horizon, hm.width, hm.height, tau);
    est.plane = ransac_horizon_plane(hpts, est.vertical, cfg);
    est.rp = rollpitch_from_normal(est.plane.normal);
    return est;
}

HeatMapPair FileHeatmapSource::get(const std::string& frame_stem, int width,
                                   int height) {
    HeatMapPair hm;
    int hw = 0, hh = 0;
    hm.horizon = load_gray_grid(dir_ + "/" + frame_stem + "_horizon.png", hw, hh);
    int vw = 0, vh = 0;
    hm.vertical = load_gray_grid(dir_ + "/" + frame_stem + "_vertical.png", vw, vh);
    if (hw != width || hh != height || vw != width || vh != height) {
        throw Error("invalid-dimensions",
                    "heat-map size does not match the frame: " + frame_stem);
    }
    hm.width = width;
    hm.height = height;
    return hm;
}

SyntheticHeatmapSource::SyntheticHeatmapSource(
    std::vector<std::pair<std::string, RotationSO3>> rotations, double sigma_deg,
    double eta, std::uint64_t seed)
    : rotations_(std::move(rotations)), sigma_deg_(sigma_deg), eta_(eta), seed_(seed) {}

HeatMapPair SyntheticHeatmapSource::get(const std::string& frame_stem, int width,
                                        int height) {
    for (std::size_t i = 0; i < rotations_.size(); ++i) {
        if (rotations_[i].first == frame_stem) {
            return synth_heatmaps(rotations_[i].second, width, height, sigma_deg_,
                                  eta_, seed_ + i);
        }
    }
    throw Error("missing-heatmap", "no synthetic rotation for frame " + frame_stem);
}

}  // namespace vgyro
