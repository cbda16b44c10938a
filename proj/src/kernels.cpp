#include "vgyro/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "vgyro/detail/photometric.hpp"

namespace vgyro::kernels {

namespace {

double mixture_value_scalar(const double* vx, const double* vy, const double* vz,
                            const double* w, std::size_t n, const double q[3],
                            double inv_l2, double dot_cutoff) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dot = q[0] * vx[i] + q[1] * vy[i] + q[2] * vz[i];
        if (dot < dot_cutoff) continue;
        acc += w[i] * std::exp((dot - 1.0) * inv_l2);
    }
    return acc;
}

MixtureDerivs mixture_derivs_scalar(const double* vx, const double* vy,
                                    const double* vz, const double* w,
                                    std::size_t n, const double q[3],
                                    const double q1[3], const double q2[3],
                                    double inv_l2, double dot_cutoff) {
    MixtureDerivs out;
    for (std::size_t i = 0; i < n; ++i) {
        const double dot = q[0] * vx[i] + q[1] * vy[i] + q[2] * vz[i];
        if (dot < dot_cutoff) continue;
        const double we = w[i] * std::exp((dot - 1.0) * inv_l2);
        const double a = (q1[0] * vx[i] + q1[1] * vy[i] + q1[2] * vz[i]) * inv_l2;
        const double b = (q2[0] * vx[i] + q2[1] * vy[i] + q2[2] * vz[i]) * inv_l2;
        out.g += we;
        out.d1 += we * a;
        out.d2 += we * (a * a + b);
    }
    return out;
}

void bilinear_many_scalar(const double* img, int width, int height,
                          const double* u, const double* v, std::size_t n,
                          double* out) {
    const double wf = static_cast<double>(width);
    for (std::size_t i = 0; i < n; ++i) {
        double uu = u[i] - std::floor(u[i] / wf) * wf;
        if (uu >= wf) uu -= wf;
        const double vv = std::clamp(v[i], 0.0, static_cast<double>(height - 1));
        int x0 = static_cast<int>(uu);
        if (x0 >= width) x0 = width - 1;
        const double fx = uu - x0;
        int y0 = static_cast<int>(vv);
        if (y0 > height - 2) y0 = std::max(height - 2, 0);
        const double fy = vv - y0;
        const int x1 = (x0 + 1 == width) ? 0 : x0 + 1;
        const int y1 = std::min(y0 + 1, height - 1);
        const double i00 = img[y0 * width + x0];
        const double i01 = img[y0 * width + x1];
        const double i10 = img[y1 * width + x0];
        const double i11 = img[y1 * width + x1];
        const double top = (1.0 - fx) * i00 + fx * i01;
        const double bot = (1.0 - fx) * i10 + fx * i11;
        out[i] = (1.0 - fy) * top + fy * bot;
    }
}

double ssd_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void photo_normal_scalar(const double* img, int width, int height, const double r[9],
                         const double* vx, const double* vy, const double* vz,
                         const double* a, std::size_t n, PhotoNormal* out) {
    *out = PhotoNormal{};
    for (std::size_t k = 0; k < n; ++k) {
        const double yx = r[0] * vx[k] + r[1] * vy[k] + r[2] * vz[k];
        const double yy = r[3] * vx[k] + r[4] * vy[k] + r[5] * vz[k];
        const double yz = r[6] * vx[k] + r[7] * vy[k] + r[8] * vz[k];
        double val, g[3];
        const bool ok = detail::photo_value_grad(img, width, height, yx, yy, yz, val, g);
        const double res = a[k] - val;
        out->cost += res * res;
        if (!ok) continue;
        const double jx = g[1] * yz - g[2] * yy;
        const double jy = g[2] * yx - g[0] * yz;
        const double jz = g[0] * yy - g[1] * yx;
        out->jtj[0] += jx * jx;
        out->jtj[1] += jx * jy;
        out->jtj[2] += jx * jz;
        out->jtj[3] += jy * jy;
        out->jtj[4] += jy * jz;
        out->jtj[5] += jz * jz;
        out->jtr[0] += jx * res;
        out->jtr[1] += jy * res;
        out->jtr[2] += jz * res;
    }
}

double photo_cost_scalar(const double* img, int width, int height, const double r[9],
                         const double* vx, const double* vy, const double* vz,
                         const double* a, std::size_t n) {
    double cost = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double yx = r[0] * vx[k] + r[1] * vy[k] + r[2] * vz[k];
        const double yy = r[3] * vx[k] + r[4] * vy[k] + r[5] * vz[k];
        const double yz = r[6] * vx[k] + r[7] * vy[k] + r[8] * vz[k];
        const double phi = std::atan2(yy, yx);
        const double theta = std::asin(std::clamp(yz, -1.0, 1.0));
        double u = (phi + M_PI) * width / (2.0 * M_PI) - 0.5;
        if (u < 0.0) u += width;
        if (u >= width) u -= width;
        const double v =
            std::max((M_PI / 2.0 - theta) * height / M_PI - 0.5, 0.0);
        double val, du, dv;
        detail::sample_with_slopes(img, width, height, u, v, val, du, dv);
        const double res = a[k] - val;
        cost += res * res;
    }
    return cost;
}

const Backend kScalar = {
    "scalar",
    mixture_value_scalar,
    mixture_derivs_scalar,
    bilinear_many_scalar,
    ssd_scalar,
    photo_normal_scalar,
    photo_cost_scalar,
};

const Backend* select_backend() {
    const char* env = std::getenv("VGYRO_KERNELS");
    if (env && std::strcmp(env, "scalar") == 0) return &kScalar;
    const Backend* avx2 = avx2_backend();
    if (env && std::strcmp(env, "avx2") == 0 && !avx2) return &kScalar;
    return avx2 ? avx2 : &kScalar;
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active_backend() {
    static const Backend* selected = select_backend();
    return *selected;
}

}  // namespace vgyro::kernels
