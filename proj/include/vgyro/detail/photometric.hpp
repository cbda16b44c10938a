#pragma once

// Scalar per-vertex photometric sampling shared by the reference kernels and
// the public gradient op: bilinear value with interpolant slopes, chained to
// the sphere-tangent brightness gradient.

#include <algorithm>
#include <cmath>

namespace vgyro::detail {

inline void sample_with_slopes(const double* img, int w, int h, double u, double v,
                               double& val, double& du, double& dv) {
    const double wf = static_cast<double>(w);
    double uu = u - std::floor(u / wf) * wf;
    if (uu >= wf) uu -= wf;
    const double vv = std::clamp(v, 0.0, static_cast<double>(h - 1));
    int x0 = static_cast<int>(uu);
    if (x0 >= w) x0 = w - 1;
    const double fx = uu - x0;
    int y0 = static_cast<int>(vv);
    if (y0 > h - 2) y0 = std::max(h - 2, 0);
    const double fy = vv - y0;
    const int x1 = (x0 + 1 == w) ? 0 : x0 + 1;
    const int y1 = std::min(y0 + 1, h - 1);

    const double i00 = img[y0 * w + x0];
    const double i01 = img[y0 * w + x1];
    const double i10 = img[y1 * w + x0];
    const double i11 = img[y1 * w + x1];
    const double top = (1.0 - fx) * i00 + fx * i01;
    const double bot = (1.0 - fx) * i10 + fx * i11;
    val = (1.0 - fy) * top + fy * bot;
    du = (1.0 - fy) * (i01 - i00) + fy * (i11 - i10);
    dv = bot - top;
}

// Brightness value and tangent gradient of the panorama interpolant at the
// unit direction (yx, yy, yz). Returns false (gradient zeroed) within 1 px of
// a pole, where the longitude chain blows up.
inline bool photo_value_grad(const double* img, int w, int h, double yx, double yy,
                             double yz, double& val, double grad[3]) {
    const double phi = std::atan2(yy, yx);
    const double theta = std::asin(std::clamp(yz, -1.0, 1.0));
    double u = (phi + M_PI) * w / (2.0 * M_PI) - 0.5;
    if (u < 0.0) u += w;
    if (u >= w) u -= w;
    const double v = (M_PI / 2.0 - theta) * h / M_PI - 0.5;

    double du, dv;
    sample_with_slopes(img, w, h, u, std::max(v, 0.0), val, du, dv);

    const double c2 = yx * yx + yy * yy;
    if (v < 0.5 || v > h - 1.5 || c2 < 1e-12) {
        grad[0] = grad[1] = grad[2] = 0.0;
        return false;
    }
    const double su = du * w / (2.0 * M_PI) / c2;
    const double sv = -dv * h / M_PI / std::sqrt(c2);
    grad[0] = su * -yy + sv * (-yz * yx);
    grad[1] = su * yx + sv * (-yz * yy);
    grad[2] = sv * (1.0 - yz * yz);
    return true;
}

}  // namespace vgyro::detail
