#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <random>

#include "support.hpp"
#include "vgyro/image.hpp"
#include "vgyro/kernels.hpp"
#include "vgyro/mpp.hpp"
#include "vgyro/pvg.hpp"

using namespace vgyro;

namespace {

EquirectImage constant_image(int w, int h, double c) {
    EquirectImage img = make_equirect(w, h);
    for (double& p : img.gray) p = c;
    return img;
}

// Residual vector r_k(R) = a_k - cur(proj(R x_k)) evaluated through the
// public sampling op; used as the finite-difference side of the Jacobian
// check.
std::vector<double> residuals_at(const std::vector<double>& a,
                                 const EquirectImage& cur,
                                 const IcosphereGrid& grid,
                                 const Eigen::Matrix3d& r) {
    const SphericalBrightness sb =
        sample_spherical(cur, grid, RotationSO3::from_matrix(r).transposed());
    std::vector<double> res(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) res[k] = a[k] - sb.values[k];
    return res;
}

}  // namespace

TEST_CASE("sample_spherical: constants and identity sampling") {
    const IcosphereGrid grid = build_icosphere(2);
    auto g = testsup::rng(71);
    const SphericalBrightness flat =
        sample_spherical(constant_image(128, 64, 0.6), grid, testsup::random_rotation(g));
    for (const double v : flat.values) CHECK(v == doctest::Approx(0.6));

    const EquirectImage img = make_blob_panorama(72, 128, 64);
    const SphericalBrightness sb =
        sample_spherical(img, grid, RotationSO3::identity());
    REQUIRE(sb.values.size() == grid.vertices.size());
    for (std::size_t k = 0; k < grid.vertices.size(); ++k) {
        const PixelCoord pc = direction_to_equirect(grid.vertices[k], 128, 64);
        CHECK(std::abs(sb.values[k] - sample_bilinear(img, pc.u, pc.v)) < 1e-14);
    }
}

TEST_CASE("sample_spherical commutes with rotate_equirect") {
    auto g = testsup::rng(73);
    const EquirectImage img = make_blob_panorama(74, 256, 128);
    const IcosphereGrid grid = build_icosphere(3);
    const RotationSO3 r = testsup::axis_angle(testsup::random_direction(g), 0.5);

    const SphericalBrightness direct = sample_spherical(img, grid, r);
    const SphericalBrightness via_image =
        sample_spherical(rotate_equirect(img, r), grid, RotationSO3::identity());
    double sum = 0.0;
    for (std::size_t k = 0; k < direct.values.size(); ++k) {
        sum += std::abs(direct.values[k] - via_image.values[k]);
    }
    CHECK(sum / direct.values.size() < 0.02);
}

TEST_CASE("spherical_gradient: constant image gives the zero vector") {
    const EquirectImage img = constant_image(128, 64, 0.5);
    auto g = testsup::rng(75);
    for (int i = 0; i < 50; ++i) {
        const Direction x = testsup::random_direction(g);
        CHECK(spherical_gradient(img, x, testsup::random_rotation(g)).norm() == 0.0);
    }
}

TEST_CASE("spherical_gradient: horizontal ramp follows the longitude tangent") {
    const int w = 256, h = 128;
    EquirectImage ramp = make_equirect(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) ramp.at(x, y) = static_cast<double>(x) / w;
    }
    auto g = testsup::rng(76);
    std::uniform_real_distribution<double> lon(-2.4, 2.4);  // clear of the seam
    std::uniform_real_distribution<double> lat(-1.2, 1.2);
    for (int i = 0; i < 200; ++i) {
        const double phi = lon(g), theta = lat(g);
        const Direction d(std::cos(theta) * std::cos(phi),
                          std::cos(theta) * std::sin(phi), std::sin(theta));
        const Eigen::Vector3d grad =
            spherical_gradient(ramp, d, RotationSO3::identity());
        CHECK(std::abs(grad.dot(d)) < 1e-9);  // tangency
        // d/du = 1/W; chain gives magnitude 1/(2 pi cos(theta)).
        CHECK(grad.norm() == doctest::Approx(1.0 / (2.0 * M_PI * std::cos(theta)))
                                 .epsilon(1e-6));
        const Eigen::Vector3d east = Direction(0, 0, 1).cross(d).normalized();
        CHECK(grad.normalized().dot(east) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("spherical_gradient matches tangent finite differences") {
    const EquirectImage img = make_blob_panorama(77, 256, 128);
    auto g = testsup::rng(78);
    const double h = 1e-4;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 300; ++i) {
        const Direction x = testsup::random_direction(g);
        if (std::abs(x.z()) > 0.98) continue;  // pole guard region
        const RotationSO3 r = testsup::random_rotation(g);
        const Direction d = r.transposed() * x;
        if (std::abs(d.z()) > 0.98) continue;
        const Eigen::Vector3d grad = spherical_gradient(img, x, r);

        const Direction t1 = d.unitOrthogonal();
        const Direction t2 = d.cross(t1);
        for (const Direction& t : {t1, t2}) {
            auto val = [&](double s) {
                const Direction ds = std::cos(s) * d + std::sin(s) * t;
                const PixelCoord pc = direction_to_equirect(ds, 256, 128);
                return sample_bilinear(img, pc.u, pc.v);
            };
            const double fd = (val(h) - val(-h)) / (2.0 * h);
            const double an = grad.dot(t);
            num += (fd - an) * (fd - an);
            den += fd * fd;
        }
    }
    REQUIRE(den > 0.0);
    CHECK(std::sqrt(num / den) < 2e-2);
}

TEST_CASE("spherical_gradient: pole guard returns zero") {
    const EquirectImage img = make_blob_panorama(79, 128, 64);
    CHECK(spherical_gradient(img, Direction(0, 0, 1), RotationSO3::identity()).norm() ==
          0.0);
    CHECK(spherical_gradient(img, Direction(0, 0, -1), RotationSO3::identity())
              .norm() == 0.0);
}

TEST_CASE("refine_rotation: aligned pair converges immediately") {
    const EquirectImage img = make_blob_panorama(80, 256, 128);
    RefineConfig cfg;
    cfg.level = 4;
    const RefineResult rr = refine_rotation(img, img, RotationSO3::identity(), cfg);
    CHECK(rr.converged);
    CHECK(rr.iterations <= 2);
    CHECK(rr.final_cost == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(geodesic_angle(rr.rotation, RotationSO3::identity()) < 1e-12);
}

TEST_CASE("refine_rotation: 10-degree offset converges below 0.1 degree") {
    auto g = testsup::rng(81);
    const IcosphereGrid grid = build_icosphere(5);
    for (int trial = 0; trial < 3; ++trial) {
        const EquirectImage ref = make_blob_panorama(82 + trial, 512, 256);
        const RotationSO3 r_true =
            testsup::axis_angle(testsup::random_direction(g), deg2rad(8.0));
        const EquirectImage cur = rotate_equirect(ref, r_true);
        const RotationSO3 r0 =
            testsup::axis_angle(testsup::random_direction(g), deg2rad(10.0)) * r_true;
        const RefineResult rr = refine_rotation(ref, cur, r0, RefineConfig{}, grid);
        CHECK(rr.converged);
        CHECK(rad2deg(geodesic_angle(rr.rotation, r_true)) < 0.1);
    }
}

TEST_CASE("refine_rotation: 12.5-degree offsets converge, 45 degrees tolerated") {
    auto g = testsup::rng(83);
    const IcosphereGrid grid = build_icosphere(5);
    const EquirectImage ref = make_blob_panorama(84, 512, 256);
    const RotationSO3 r_true = testsup::axis_angle(Direction(0, 0, 1), deg2rad(5.0));
    const EquirectImage cur = rotate_equirect(ref, r_true);

    const RotationSO3 r_small =
        testsup::axis_angle(testsup::random_direction(g), deg2rad(12.5)) * r_true;
    const RefineResult near = refine_rotation(ref, cur, r_small, RefineConfig{}, grid);
    CHECK(rad2deg(geodesic_angle(near.rotation, r_true)) < 0.1);

    // Far start: no convergence asserted, but the cost never worsens.
    const RotationSO3 r_far =
        testsup::axis_angle(testsup::random_direction(g), deg2rad(45.0)) * r_true;
    const RefineResult far = refine_rotation(ref, cur, r_far, RefineConfig{}, grid);
    CHECK(far.final_cost <= far.initial_cost);
}

TEST_CASE("analytic Jacobian matches central differences (rel 1e-3)") {
    const IcosphereGrid grid = build_icosphere(3);
    const EquirectImage ref = make_blob_panorama(85, 256, 128);
    const EquirectImage cur = rotate_equirect(ref, RotationSO3::rot_z(deg2rad(4.0)));
    const RotationSO3 r0 = RotationSO3::rot_z(deg2rad(2.0));

    // Reference brightness exactly as the refiner builds it.
    const SphericalBrightness base =
        sample_spherical(ref, grid, RotationSO3::identity());

    // Analytic rows: j_k = grad x y_k at y_k = R0 x_k.
    const std::size_t n = grid.vertices.size();
    Eigen::MatrixXd j_an(n, 3);
    for (std::size_t k = 0; k < n; ++k) {
        const Direction y = r0.matrix() * grid.vertices[k];
        const Eigen::Vector3d grad = spherical_gradient(cur, grid.vertices[k],
                                                        r0.transposed());
        j_an.row(k) = grad.cross(y).transpose();
    }

    const double h = 1e-4;
    Eigen::MatrixXd j_fd(n, 3);
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::Vector3d omega = Eigen::Vector3d::Zero();
        omega[axis] = h;
        const Eigen::Matrix3d rp = (RotationSO3::exp(omega) * r0).matrix();
        const Eigen::Matrix3d rm = (RotationSO3::exp(-omega) * r0).matrix();
        const auto res_p = residuals_at(base.values, cur, grid, rp);
        const auto res_m = residuals_at(base.values, cur, grid, rm);
        for (std::size_t k = 0; k < n; ++k) {
            j_fd(k, axis) = (res_p[k] - res_m[k]) / (2.0 * h);
        }
    }
    CHECK((j_an - j_fd).norm() / j_fd.norm() < 1e-3);
}

TEST_CASE("refine_rotation: monotone cost on random starts") {
    auto g = testsup::rng(86);
    const IcosphereGrid grid = build_icosphere(4);
    const EquirectImage ref = make_blob_panorama(87, 256, 128);
    for (int trial = 0; trial < 4; ++trial) {
        const RotationSO3 r_true = testsup::random_rotation(g);
        const EquirectImage cur = rotate_equirect(ref, r_true);
        const RotationSO3 r0 = testsup::random_rotation(g);
        const RefineResult rr = refine_rotation(ref, cur, r0, RefineConfig{}, grid);
        CHECK(rr.final_cost <= rr.initial_cost);
    }
}

TEST_CASE("refine_rotation: left-composition consistency within 0.05 degree") {
    auto g = testsup::rng(88);
    const IcosphereGrid grid = build_icosphere(5);
    const EquirectImage ref = make_blob_panorama(89, 512, 256);
    const RotationSO3 r_true =
        testsup::axis_angle(testsup::random_direction(g), deg2rad(6.0));
    const EquirectImage cur = rotate_equirect(ref, r_true);
    const RotationSO3 r0 =
        testsup::axis_angle(testsup::random_direction(g), deg2rad(3.0)) * r_true;

    const RefineResult plain = refine_rotation(ref, cur, r0, RefineConfig{}, grid);

    const RotationSO3 q = testsup::axis_angle(testsup::random_direction(g), deg2rad(20.0));
    const EquirectImage cur_q = rotate_equirect(cur, q);
    const RefineResult shifted =
        refine_rotation(ref, cur_q, q * r0, RefineConfig{}, grid);

    CHECK(rad2deg(geodesic_angle(shifted.rotation, q * plain.rotation)) < 0.05);
}

TEST_CASE("n=5 grid carries 10242 residuals") {
    const IcosphereGrid grid = build_icosphere(5);
    CHECK(grid.vertices.size() == 10242);
    const EquirectImage img = make_blob_panorama(90, 128, 64);
    CHECK(sample_spherical(img, grid, RotationSO3::identity()).values.size() == 10242);
}

TEST_CASE("one refine iteration beats one MPP cost+derivative pass by 10x") {
    using clk = std::chrono::steady_clock;
    const EquirectImage ref = make_blob_panorama(91, 512, 256);
    const EquirectImage cur = rotate_equirect(ref, RotationSO3::rot_z(0.1));
    const IcosphereGrid g3 = build_icosphere(3);
    const IcosphereGrid g5 = build_icosphere(5);
    MppModel gref = build_mpp(ref, g3, 0.325);
    MppModel greq = build_mpp(cur, g3, 0.325);
    gref.dot_cutoff = greq.dot_cutoff = -2.0;  // full kernel sums

    auto best_of = [](auto&& fn, int outer) {
        double best = 1e300;
        for (int i = 0; i < outer; ++i) {
            const auto t0 = clk::now();
            fn();
            best = std::min(best,
                            std::chrono::duration<double>(clk::now() - t0).count());
        }
        return best;
    };

    volatile double sink = 0.0;
    const double t_mpp = best_of(
        [&] {
            sink = mpp_ssd_cost(gref, greq, RotationSO3::rot_z(0.05));
            sink = mpp_yaw_cost_derivs(gref, greq, RollPitch{0, 0}, 0.05).cost;
        },
        3);
    const double t_iter = best_of(
        [&] {
            sink = refine_iteration_probe(ref, cur, RotationSO3::rot_z(0.05), g5, 20);
        },
        3) / 20.0;

    MESSAGE("mpp cost+derivs: " << t_mpp * 1e3 << " ms, refine iteration: "
                                << t_iter * 1e3 << " ms, ratio "
                                << t_mpp / t_iter);
    CHECK(t_mpp >= 10.0 * t_iter);
}
