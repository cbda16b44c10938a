#pragma once

#include <cstddef>

namespace vgyro::kernels {

// Hot inner loops used by the MPP mixture, the photometric refiner and the
// panorama resampler. Each kernel exists as a scalar reference implementation
// and (on x86-64) an AVX2+FMA variant selected at runtime; the variants are
// equivalence-tested against the reference. All reductions use a fixed
// accumulation order per backend, so outputs are bit-reproducible for a
// given backend.

// First and second direction-derivative sums of a weighted spherical
// Gaussian mixture (see MppModel): for query direction q with derivative
// directions q1, q2,
//   g  = sum_i w[i] * e_i
//   d1 = sum_i w[i] * e_i * a_i
//   d2 = sum_i w[i] * e_i * (a_i^2 + b_i)
// with e_i = exp((q.v_i - 1) * inv_l2), a_i = (q1.v_i) * inv_l2,
// b_i = (q2.v_i) * inv_l2. Contributions with q.v_i < dot_cutoff are skipped.
struct MixtureDerivs {
    double g = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// Accumulated Gauss-Newton system of the photometric residuals
// r_k = a[k] - img(proj(R x_k)) over the rotation tangent.
struct PhotoNormal {
    double cost = 0.0;
    double jtj[6] = {0, 0, 0, 0, 0, 0};  // upper triangle: xx xy xz yy yz zz
    double jtr[3] = {0, 0, 0};
};

struct Backend {
    const char* name;

    double (*mixture_value)(const double* vx, const double* vy, const double* vz,
                            const double* w, std::size_t n, const double q[3],
                            double inv_l2, double dot_cutoff);

    MixtureDerivs (*mixture_derivs)(const double* vx, const double* vy,
                                    const double* vz, const double* w,
                                    std::size_t n, const double q[3],
                                    const double q1[3], const double q2[3],
                                    double inv_l2, double dot_cutoff);

    // Batch bilinear sampling of an H x W grid at continuous pixel-center
    // coordinates: u wraps modulo W (seam continuity), v clamps to [0, H-1].
    void (*bilinear_many)(const double* img, int width, int height,
                          const double* u, const double* v, std::size_t n,
                          double* out);

    double (*ssd)(const double* a, const double* b, std::size_t n);

    // Photometric passes over grid vertices (SoA), rotation r row-major:
    // project R x_k into the panorama, sample bilinearly, accumulate the SSD
    // cost (all vertices) and, for the normal pass, Jacobian products with
    // rows zeroed by the pole guard.
    void (*photo_normal_pass)(const double* img, int width, int height,
                              const double r[9], const double* vx,
                              const double* vy, const double* vz, const double* a,
                              std::size_t n, PhotoNormal* out);

    double (*photo_cost_pass)(const double* img, int width, int height,
                              const double r[9], const double* vx,
                              const double* vy, const double* vz, const double* a,
                              std::size_t n);
};

const Backend& scalar_backend();

// AVX2+FMA backend, or nullptr when the CPU or build does not support it.
const Backend* avx2_backend();

// Backend used by the library: AVX2 when available, unless overridden via
// the VGYRO_KERNELS environment variable ("scalar" or "avx2").
const Backend& active_backend();

}  // namespace vgyro::kernels
