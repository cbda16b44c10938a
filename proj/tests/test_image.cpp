#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "support.hpp"
#include "vgyro/image.hpp"
#include "vgyro/image_io.hpp"

using namespace vgyro;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path p = fs::temp_directory_path() / "vgyro_image_tests";
    fs::create_directories(p);
    return p;
}

double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / a.size();
}

double mean(const std::vector<double>& a) {
    double s = 0.0;
    for (const double v : a) s += v;
    return s / a.size();
}

}  // namespace

TEST_CASE("to_grayscale uses the stated luma coefficients") {
    EquirectImage img = make_equirect(4, 2, true);
    auto set_px = [&](int i, double r, double g, double b) {
        img.rgb[3 * i] = r;
        img.rgb[3 * i + 1] = g;
        img.rgb[3 * i + 2] = b;
    };
    set_px(0, 1, 1, 1);
    set_px(1, 0, 0, 0);
    set_px(2, 1, 0, 0);
    const EquirectImage gray = to_grayscale(img);
    CHECK(gray.gray[0] == doctest::Approx(1.0));
    CHECK(gray.gray[1] == doctest::Approx(0.0));
    CHECK(gray.gray[2] == doctest::Approx(0.299));

    const EquirectImage no_color = make_equirect(4, 2);
    CHECK_THROWS_AS(to_grayscale(no_color), Error);
}

TEST_CASE("sample_bilinear: exact centers, seam blend, constants") {
    EquirectImage img = make_equirect(8, 4);
    auto g = testsup::rng(21);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (double& p : img.gray) p = u01(g);

    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 8; ++x) {
            CHECK(sample_bilinear(img, x, y) == img.at(x, y));
        }
    }

    // u = W - 0.2 blends the last and first columns with weights 0.2 / 0.8.
    const double got = sample_bilinear(img, 8 - 0.2, 1.0);
    const double want = 0.2 * img.at(7, 1) + 0.8 * img.at(0, 1);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));

    EquirectImage flat = make_equirect(8, 4);
    for (double& p : flat.gray) p = 0.37;
    std::uniform_real_distribution<double> du(-20.0, 20.0);
    for (int i = 0; i < 200; ++i) {
        CHECK(sample_bilinear(flat, du(g), du(g)) == doctest::Approx(0.37));
    }
}

TEST_CASE("sample_bilinear is continuous across the seam") {
    EquirectImage img = make_blob_panorama(3, 64, 32);
    for (double eps : {1e-3, 1e-6, 1e-9}) {
        const double left = sample_bilinear(img, 64.0 - eps, 10.3);
        const double right = sample_bilinear(img, 64.0 + eps, 10.3);
        CHECK(std::abs(left - right) < 2e-2 * eps / 1e-3 + 1e-12);
    }
}

TEST_CASE("rotate_equirect: identity is a no-op") {
    const EquirectImage img = make_blob_panorama(4, 128, 64);
    const EquirectImage out = rotate_equirect(img, RotationSO3::identity());
    double worst = 0.0;
    for (std::size_t i = 0; i < img.gray.size(); ++i) {
        worst = std::max(worst, std::abs(img.gray[i] - out.gray[i]));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("rotate_equirect: yaw of 180 deg is an exact 256-column shift") {
    const int w = 512, h = 256;
    const EquirectImage img = make_blob_panorama(5, w, h);
    const EquirectImage out = rotate_equirect(img, RotationSO3::rot_z(M_PI));

    // Per-pixel remap oracle for the integer half-turn.
    double worst = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double want = img.at((x + w / 2) % w, y);
            worst = std::max(worst, std::abs(out.at(x, y) - want));
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("rotate_equirect: R then R^T round-trips within interpolation loss") {
    auto g = testsup::rng(22);
    const EquirectImage img = make_blob_panorama(6, 256, 128);
    const RotationSO3 r = testsup::random_rotation(g);
    const EquirectImage back = rotate_equirect(rotate_equirect(img, r), r.transposed());
    CHECK(mean_abs_diff(img.gray, back.gray) < 0.02);
}

TEST_CASE("rotate_equirect: composition matches R2*R1 within tolerance") {
    auto g = testsup::rng(23);
    const EquirectImage img = make_blob_panorama(7, 256, 128);
    const RotationSO3 r1 = testsup::axis_angle(testsup::random_direction(g), 0.4);
    const RotationSO3 r2 = testsup::axis_angle(testsup::random_direction(g), 0.7);
    const EquirectImage two_step = rotate_equirect(rotate_equirect(img, r1), r2);
    const EquirectImage one_step = rotate_equirect(img, r2 * r1);
    CHECK(mean_abs_diff(two_step.gray, one_step.gray) < 0.02);
}

TEST_CASE("rotate_equirect preserves mean intensity on smooth images") {
    auto g = testsup::rng(24);
    const EquirectImage img = make_blob_panorama(8, 256, 128);
    const RotationSO3 r = testsup::random_rotation(g);
    const EquirectImage out = rotate_equirect(img, r);
    CHECK(std::abs(mean(img.gray) - mean(out.gray)) < 0.01);
}

TEST_CASE("rotate_equirect carries color planes") {
    EquirectImage img = make_equirect(64, 32, true);
    auto g = testsup::rng(25);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (double& p : img.rgb) p = u01(g);
    for (std::size_t i = 0; i < img.gray.size(); ++i) {
        img.gray[i] = 0.299 * img.rgb[3 * i] + 0.587 * img.rgb[3 * i + 1] +
                      0.114 * img.rgb[3 * i + 2];
    }
    const EquirectImage out = rotate_equirect(img, RotationSO3::rot_z(M_PI));
    REQUIRE(out.has_color());
    double worst = 0.0;
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 64; ++x) {
            const std::size_t src = (static_cast<std::size_t>(y) * 64 + (x + 32) % 64) * 3;
            const std::size_t dst = (static_cast<std::size_t>(y) * 64 + x) * 3;
            for (int c = 0; c < 3; ++c) {
                worst = std::max(worst, std::abs(out.rgb[dst + c] - img.rgb[src + c]));
            }
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("lens config: parse, missing keys, range checks") {
    const fs::path dir = temp_dir();
    const fs::path good = dir / "lens_good.txt";
    {
        std::ofstream out(good);
        out << "# synthetic rig\n"
               "front.cx = 160\nfront.cy = 160\nfront.radius = 150\nfront.fov = 200\n"
               "rear.cx = 480\nrear.cy = 160\nrear.radius = 150\nrear.fov = 200\n";
    }
    const LensPair lp = load_lens_config(good.string());
    CHECK(lp.front.cx == doctest::Approx(160));
    CHECK(lp.rear.fov_deg == doctest::Approx(200));

    const fs::path missing = dir / "lens_missing.txt";
    {
        std::ofstream out(missing);
        out << "front.cx = 160\n";
    }
    CHECK_THROWS_AS(load_lens_config(missing.string()), Error);

    const fs::path bad_fov = dir / "lens_badfov.txt";
    {
        std::ofstream out(bad_fov);
        out << "front.cx=160\nfront.cy=160\nfront.radius=150\nfront.fov=170\n"
               "rear.cx=480\nrear.cy=160\nrear.radius=150\nrear.fov=200\n";
    }
    CHECK_THROWS_AS(load_lens_config(bad_fov.string()), Error);
    CHECK_THROWS_AS(load_lens_config((dir / "nope.txt").string()), Error);
}

namespace {

LensPair test_lenses(double fov) {
    LensPair lp;
    lp.front = {160, 160, 150, fov};
    lp.rear = {480, 160, 150, fov};
    return lp;
}

// Directions covered by both lenses (the blend band) for a given fov.
bool in_blend_band(const Direction& d, double fov_deg) {
    const double half = deg2rad(fov_deg) / 2.0;
    const double tf = std::acos(std::clamp(d.x(), -1.0, 1.0));
    return tf <= half && (M_PI - tf) <= half;
}

}  // namespace

TEST_CASE("dualfisheye: front lens axis hits the front lens center") {
    DualFisheyeImage df;
    df.width = 640;
    df.height = 320;
    df.lenses = test_lenses(200);
    df.rgb.assign(static_cast<std::size_t>(df.width) * df.height * 3, 0.0);
    // Constant disk around the front center so bilinear taps agree exactly.
    for (int y = 150; y <= 170; ++y) {
        for (int x = 150; x <= 170; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * df.width + x) * 3;
            df.rgb[i] = 0.8;
            df.rgb[i + 1] = 0.4;
            df.rgb[i + 2] = 0.2;
        }
    }
    const EquirectImage eq = dualfisheye_to_equirect(df, 256);
    // Output pixel closest to +x: u = W/2 - 0.5 -> columns 127/128, row 63/64.
    const std::size_t i = (static_cast<std::size_t>(63) * 256 + 127) * 3;
    CHECK(eq.rgb[i] == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(eq.rgb[i + 1] == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(eq.rgb[i + 2] == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("dualfisheye: forward render oracle round-trips") {
    const EquirectImage pano = make_blob_panorama(9, 256, 128);
    for (double fov : {200.0, 180.0}) {
        CAPTURE(fov);
        const LensPair lenses = test_lenses(fov);
        const DualFisheyeImage df = testsup::render_dualfisheye(pano, lenses, 640, 320);
        const EquirectImage back = dualfisheye_to_equirect(df, 256);

        double err = 0.0;
        std::size_t count = 0;
        for (int y = 0; y < 128; ++y) {
            for (int x = 0; x < 256; ++x) {
                const Direction d = equirect_to_direction(x, y, 256, 128);
                if (in_blend_band(d, fov)) continue;
                if (fov == 180.0 && std::abs(d.x()) < std::sin(deg2rad(2.0))) {
                    continue;  // rim ring has no blend partner at exactly 180
                }
                err += std::abs(back.at(x, y) - pano.at(x, y));
                ++count;
            }
        }
        REQUIRE(count > 0);
        CHECK(err / count < 0.03);
    }
}

TEST_CASE("dualfisheye: fov below 180 is rejected") {
    DualFisheyeImage df;
    df.width = 64;
    df.height = 32;
    df.rgb.assign(64 * 32 * 3, 0.0);
    df.lenses = test_lenses(200);
    df.lenses.front.fov_deg = 179.0;
    CHECK_THROWS_AS(dualfisheye_to_equirect(df, 64), Error);
    df.lenses.front.fov_deg = 200.0;
    CHECK_THROWS_AS(dualfisheye_to_equirect(df, 63), Error);  // odd width
}

TEST_CASE("PNG round-trip: gray and color") {
    const fs::path dir = temp_dir();
    const EquirectImage img = make_blob_panorama(10, 128, 64);
    const fs::path p = dir / "gray.png";
    save_equirect(p.string(), img);
    const EquirectImage back = load_equirect(p.string());
    REQUIRE(back.width == 128);
    double worst = 0.0;
    for (std::size_t i = 0; i < img.gray.size(); ++i) {
        worst = std::max(worst, std::abs(img.gray[i] - back.gray[i]));
    }
    CHECK(worst <= 0.5 / 255.0 + 1e-12);  // 8-bit quantization only

    Raster rgb;
    rgb.width = 32;
    rgb.height = 16;
    rgb.channels = 3;
    auto g = testsup::rng(26);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    rgb.data.resize(32 * 16 * 3);
    for (double& v : rgb.data) v = u01(g);
    const fs::path pc = dir / "color.png";
    save_raster(pc.string(), rgb);
    const Raster rback = load_raster(pc.string());
    REQUIRE(rback.channels == 3);
    for (std::size_t i = 0; i < rgb.data.size(); ++i) {
        CHECK(std::abs(rback.data[i] - rgb.data[i]) <= 0.5 / 255.0 + 1e-12);
    }
}

TEST_CASE("JPEG round-trip within lossy tolerance") {
    const fs::path dir = temp_dir();
    const EquirectImage img = make_blob_panorama(11, 128, 64);
    const fs::path p = dir / "img.jpg";
    save_equirect(p.string(), img);
    const EquirectImage back = load_equirect(p.string());
    REQUIRE(back.width == 128);
    CHECK(mean_abs_diff(img.gray, back.gray) < 0.02);
}

TEST_CASE("load_equirect validates W = 2H; unreadable files are reported") {
    const fs::path dir = temp_dir();
    Raster square;
    square.width = 32;
    square.height = 32;
    square.channels = 1;
    square.data.assign(32 * 32, 0.5);
    const fs::path p = dir / "square.png";
    save_raster(p.string(), square);
    CHECK_THROWS_AS(load_equirect(p.string()), Error);
    CHECK_THROWS_AS(load_equirect((dir / "missing.png").string()), Error);

    const fs::path garbage = dir / "garbage.png";
    {
        std::ofstream out(garbage);
        out << "not a png";
    }
    CHECK_THROWS_AS(load_raster(garbage.string()), Error);
    CHECK_THROWS_AS(load_raster((dir / "file.bmp").string()), Error);
}

TEST_CASE("make_blob_panorama: deterministic, in range") {
    const EquirectImage a = make_blob_panorama(42, 128, 64);
    const EquirectImage b = make_blob_panorama(42, 128, 64);
    CHECK(a.gray == b.gray);
    double lo = 1.0, hi = 0.0;
    for (const double v : a.gray) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= 0.02 - 1e-12);
    CHECK(hi <= 0.98 + 1e-12);
    const EquirectImage c = make_blob_panorama(43, 128, 64);
    CHECK(a.gray != c.gray);
}
