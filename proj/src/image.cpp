#include "vgyro/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "vgyro/kernels.hpp"

namespace vgyro {

EquirectImage make_equirect(int width, int height, bool with_color) {
    if (height < 2 || width != 2 * height) {
        throw Error("invalid-dimensions", "equirectangular image requires W = 2H, H >= 2");
    }
    EquirectImage img;
    img.width = width;
    img.height = height;
    img.gray.assign(static_cast<std::size_t>(width) * height, 0.0);
    if (with_color) img.rgb.assign(static_cast<std::size_t>(width) * height * 3, 0.0);
    return img;
}

EquirectImage to_grayscale(const EquirectImage& img) {
    if (!img.has_color()) {
        throw Error("missing-color", "to_grayscale requires color planes");
    }
    EquirectImage out = make_equirect(img.width, img.height);
    const std::size_t n = out.gray.size();
    for (std::size_t i = 0; i < n; ++i) {
        out.gray[i] = 0.299 * img.rgb[3 * i] + 0.587 * img.rgb[3 * i + 1] +
                      0.114 * img.rgb[3 * i + 2];
    }
    return out;
}

double sample_bilinear(const EquirectImage& img, double u, double v) {
    double out = 0.0;
    kernels::scalar_backend().bilinear_many(img.gray.data(), img.width, img.height,
                                            &u, &v, 1, &out);
    return out;
}

namespace {

// Per-column cos/sin of longitude and per-row cos/sin of latitude for the
// pixel-center grid of a W x H panorama.
struct DirectionTable {
    std::vector<double> cphi, sphi, ctheta, stheta;

    DirectionTable(int width, int height) {
        cphi.resize(width);
        sphi.resize(width);
        ctheta.resize(height);
        stheta.resize(height);
        for (int x = 0; x < width; ++x) {
            const double phi = 2.0 * M_PI * (x + 0.5) / width - M_PI;
            cphi[x] = std::cos(phi);
            sphi[x] = std::sin(phi);
        }
        for (int y = 0; y < height; ++y) {
            const double theta = M_PI / 2.0 - M_PI * (y + 0.5) / height;
            ctheta[y] = std::cos(theta);
            stheta[y] = std::sin(theta);
        }
    }

    Direction at(int x, int y) const {
        return Direction(ctheta[y] * cphi[x], ctheta[y] * sphi[x], stheta[y]);
    }
};

}  // namespace

EquirectImage rotate_equirect(const EquirectImage& img, const RotationSO3& r) {
    EquirectImage out = make_equirect(img.width, img.height, img.has_color());
    const int w = img.width, h = img.height;
    const Eigen::Matrix3d rt = r.matrix().transpose();
    const DirectionTable table(w, h);
    const auto& backend = kernels::active_backend();

    std::vector<double> us(w), vs(w), row(w);
    std::vector<double> plane_in;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Direction s = rt * table.at(x, y);
            project_equirect(s, w, h, us[x], vs[x]);
        }
        backend.bilinear_many(img.gray.data(), w, h, us.data(), vs.data(), w, row.data());
        std::copy(row.begin(), row.end(), out.gray.begin() + static_cast<std::size_t>(y) * w);
        if (img.has_color()) {
            if (plane_in.empty()) plane_in.resize(static_cast<std::size_t>(w) * h);
            for (int c = 0; c < 3; ++c) {
                for (std::size_t i = 0; i < plane_in.size(); ++i) {
                    plane_in[i] = img.rgb[3 * i + c];
                }
                backend.bilinear_many(plane_in.data(), w, h, us.data(), vs.data(), w,
                                      row.data());
                for (int x = 0; x < w; ++x) {
                    out.rgb[3 * (static_cast<std::size_t>(y) * w + x) + c] = row[x];
                }
            }
        }
    }
    return out;
}

namespace {

struct LensFrame {
    Direction axis, right, down;
};

LensFrame lens_frame(bool front) {
    if (front) return {Direction(1, 0, 0), Direction(0, -1, 0), Direction(0, 0, -1)};
    return {Direction(-1, 0, 0), Direction(0, 1, 0), Direction(0, 0, -1)};
}

// Clamped (non-wrapping) bilinear fetch from an interleaved RGB raster.
void fetch_rgb(const std::vector<double>& rgb, int w, int h, double u, double v,
               double out[3]) {
    u = std::clamp(u, 0.0, static_cast<double>(w - 1));
    v = std::clamp(v, 0.0, static_cast<double>(h - 1));
    const int x0 = std::min(static_cast<int>(u), w - 2);
    const int y0 = std::min(static_cast<int>(v), h - 2);
    const double fx = u - x0, fy = v - y0;
    for (int c = 0; c < 3; ++c) {
        const double i00 = rgb[3 * (static_cast<std::size_t>(y0) * w + x0) + c];
        const double i01 = rgb[3 * (static_cast<std::size_t>(y0) * w + x0 + 1) + c];
        const double i10 = rgb[3 * (static_cast<std::size_t>(y0 + 1) * w + x0) + c];
        const double i11 = rgb[3 * (static_cast<std::size_t>(y0 + 1) * w + x0 + 1) + c];
        const double top = (1.0 - fx) * i00 + fx * i01;
        const double bot = (1.0 - fx) * i10 + fx * i11;
        out[c] = (1.0 - fy) * top + fy * bot;
    }
}

bool sample_lens(const DualFisheyeImage& df, const LensParams& lens, bool front,
                 const Direction& d, double out[3], double& edge_margin) {
    const LensFrame fr = lens_frame(front);
    const double half_fov = deg2rad(lens.fov_deg) / 2.0;
    const double theta = std::acos(std::clamp(d.dot(fr.axis), -1.0, 1.0));
    edge_margin = half_fov - theta;
    if (edge_margin < 0.0) return false;
    const Direction t = d - d.dot(fr.axis) * fr.axis;
    const double tn = t.norm();
    double pr = 0.0, pd = 0.0;
    if (tn > 1e-12) {
        pr = t.dot(fr.right) / tn;
        pd = t.dot(fr.down) / tn;
    }
    const double rpx = lens.radius / half_fov * theta;
    fetch_rgb(df.rgb, df.width, df.height, lens.cx + rpx * pr, lens.cy + rpx * pd, out);
    return true;
}

}  // namespace

EquirectImage dualfisheye_to_equirect(const DualFisheyeImage& df, int out_width) {
    if (out_width <= 0 || out_width % 2 != 0) {
        throw Error("invalid-dimensions", "output width must be positive and even");
    }
    if (df.lenses.front.fov_deg < 180.0 || df.lenses.rear.fov_deg < 180.0) {
        throw Error("direction-uncovered", "lens FOV below 180 deg leaves gaps");
    }
    const int w = out_width, h = out_width / 2;
    EquirectImage out = make_equirect(w, h, true);
    const DirectionTable table(w, h);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Direction d = table.at(x, y);
            double cf[3], cr[3], mf = 0.0, mr = 0.0;
            const bool in_front = sample_lens(df, df.lenses.front, true, d, cf, mf);
            const bool in_rear = sample_lens(df, df.lenses.rear, false, d, cr, mr);
            double px[3] = {0, 0, 0};
            if (in_front && in_rear) {
                const double sum = mf + mr;
                const double wf = (sum > 1e-12) ? mf / sum : 0.5;
                for (int c = 0; c < 3; ++c) px[c] = wf * cf[c] + (1.0 - wf) * cr[c];
            } else if (in_front) {
                std::copy(cf, cf + 3, px);
            } else if (in_rear) {
                std::copy(cr, cr + 3, px);
            }
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            for (int c = 0; c < 3; ++c) out.rgb[3 * i + c] = px[c];
            out.gray[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        }
    }
    return out;
}

EquirectImage make_blob_panorama(std::uint64_t seed, int width, int height,
                                 int blob_count) {
    EquirectImage img = make_equirect(width, height);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> amp(0.3, 1.0);
    std::uniform_real_distribution<double> widths(0.15, 0.5);

    std::vector<double> cx(blob_count), cy(blob_count), cz(blob_count);
    std::vector<double> a(blob_count), inv_b2(blob_count);
    for (int j = 0; j < blob_count; ++j) {
        Direction c(gauss(rng), gauss(rng), gauss(rng));
        while (c.norm() < 1e-6) c = Direction(gauss(rng), gauss(rng), gauss(rng));
        c.normalize();
        cx[j] = c.x();
        cy[j] = c.y();
        cz[j] = c.z();
        a[j] = amp(rng);
        const double b = widths(rng);
        inv_b2[j] = 1.0 / (b * b);
    }

    const DirectionTable table(width, height);
    double lo = 1e300, hi = -1e300;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Direction d = table.at(x, y);
            double s = 0.0;
            for (int j = 0; j < blob_count; ++j) {
                const double dot = d.x() * cx[j] + d.y() * cy[j] + d.z() * cz[j];
                s += a[j] * std::exp((dot - 1.0) * inv_b2[j]);
            }
            img.at(x, y) = s;
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
    }
    const double scale = (hi > lo) ? 0.96 / (hi - lo) : 0.0;
    for (double& g : img.gray) g = 0.02 + (g - lo) * scale;
    return img;
}

LensPair load_lens_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("lens-config", "cannot open lens config: " + path);

    std::map<std::string, double> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto is_space = [](unsigned char ch) { return std::isspace(ch); };
        line.erase(std::remove_if(line.begin(), line.end(), is_space), line.end());
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error("lens-config", path + ":" + std::to_string(lineno) +
                                           ": expected key=value");
        }
        try {
            kv[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
        } catch (const std::exception&) {
            throw Error("lens-config", path + ":" + std::to_string(lineno) +
                                           ": bad numeric value");
        }
    }

    auto get = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw Error("lens-config", path + ": missing key " + key);
        return it->second;
    };
    LensPair lp;
    lp.front = {get("front.cx"), get("front.cy"), get("front.radius"), get("front.fov")};
    lp.rear = {get("rear.cx"), get("rear.cy"), get("rear.radius"), get("rear.fov")};
    for (const auto* l : {&lp.front, &lp.rear}) {
        if (l->fov_deg < 180.0 || l->fov_deg > 220.0) {
            throw Error("lens-config", path + ": fov must be in [180, 220] deg");
        }
        if (l->radius <= 0.0) throw Error("lens-config", path + ": radius must be > 0");
    }
    return lp;
}

}  // namespace vgyro
