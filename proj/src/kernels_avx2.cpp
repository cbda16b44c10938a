// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64; availability is still checked at runtime via cpuid
// before the backend is handed out.

#include "vgyro/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace vgyro::kernels {

namespace {

// exp for 4 doubles: n = round(x/ln2), r = x - n*ln2 (split constant),
// exp(r) by degree-13 Horner on |r| <= ln2/2, scaled by 2^n through the
// exponent bits. Inputs clamped to +-708 (callers stay far inside).
inline __m256d exp4(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
    x = _mm256_max_pd(_mm256_set1_pd(-708.0), _mm256_min_pd(x, _mm256_set1_pd(708.0)));

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
    r = _mm256_fnmadd_pd(n, ln2_lo, r);

    __m256d p = _mm256_set1_pd(1.6059043836821613e-10);         // 1/13!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.0876756987868097e-9));   // 1/12!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.5052108385441720e-8));   // 1/11!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985893e-7));   // 1/10!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985888e-6));   // 1/9!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.4801587301587302e-5));   // 1/8!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.9841269841269841e-4));   // 1/7!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.3888888888888889e-3));   // 1/6!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(8.3333333333333333e-3));   // 1/5!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(4.1666666666666664e-2));   // 1/4!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.6666666666666666e-1));   // 1/3!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(5.0e-1));                  // 1/2!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    const __m128i ni = _mm256_cvtpd_epi32(n);
    const __m256i nl = _mm256_cvtepi32_epi64(ni);
    const __m256i pow2 =
        _mm256_slli_epi64(_mm256_add_epi64(nl, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(pow2));
}

// Fixed reduction order: (l0 + l2) + (l1 + l3).
inline double hsum4(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

double mixture_value_avx2(const double* vx, const double* vy, const double* vz,
                          const double* w, std::size_t n, const double q[3],
                          double inv_l2, double dot_cutoff) {
    const __m256d qx = _mm256_set1_pd(q[0]);
    const __m256d qy = _mm256_set1_pd(q[1]);
    const __m256d qz = _mm256_set1_pd(q[2]);
    const __m256d il2 = _mm256_set1_pd(inv_l2);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d cut = _mm256_set1_pd(dot_cutoff);

    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d dot = _mm256_mul_pd(qx, _mm256_loadu_pd(vx + i));
        dot = _mm256_fmadd_pd(qy, _mm256_loadu_pd(vy + i), dot);
        dot = _mm256_fmadd_pd(qz, _mm256_loadu_pd(vz + i), dot);
        const __m256d keep = _mm256_cmp_pd(dot, cut, _CMP_GE_OQ);
        __m256d e = exp4(_mm256_mul_pd(_mm256_sub_pd(dot, one), il2));
        e = _mm256_and_pd(e, keep);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), e, acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        const double dot = q[0] * vx[i] + q[1] * vy[i] + q[2] * vz[i];
        if (dot < dot_cutoff) continue;
        tail += w[i] * std::exp((dot - 1.0) * inv_l2);
    }
    return hsum4(acc) + tail;
}

MixtureDerivs mixture_derivs_avx2(const double* vx, const double* vy,
                                  const double* vz, const double* w,
                                  std::size_t n, const double q[3],
                                  const double q1[3], const double q2[3],
                                  double inv_l2, double dot_cutoff) {
    const __m256d qx = _mm256_set1_pd(q[0]);
    const __m256d qy = _mm256_set1_pd(q[1]);
    const __m256d qz = _mm256_set1_pd(q[2]);
    const __m256d q1x = _mm256_set1_pd(q1[0]);
    const __m256d q1y = _mm256_set1_pd(q1[1]);
    const __m256d q1z = _mm256_set1_pd(q1[2]);
    const __m256d q2x = _mm256_set1_pd(q2[0]);
    const __m256d q2y = _mm256_set1_pd(q2[1]);
    const __m256d q2z = _mm256_set1_pd(q2[2]);
    const __m256d il2 = _mm256_set1_pd(inv_l2);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d cut = _mm256_set1_pd(dot_cutoff);

    __m256d acc_g = _mm256_setzero_pd();
    __m256d acc_d1 = _mm256_setzero_pd();
    __m256d acc_d2 = _mm256_setzero_pd();

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(vx + i);
        const __m256d y = _mm256_loadu_pd(vy + i);
        const __m256d z = _mm256_loadu_pd(vz + i);

        __m256d dot = _mm256_mul_pd(qx, x);
        dot = _mm256_fmadd_pd(qy, y, dot);
        dot = _mm256_fmadd_pd(qz, z, dot);
        const __m256d keep = _mm256_cmp_pd(dot, cut, _CMP_GE_OQ);

        __m256d e = exp4(_mm256_mul_pd(_mm256_sub_pd(dot, one), il2));
        e = _mm256_and_pd(e, keep);
        const __m256d we = _mm256_mul_pd(_mm256_loadu_pd(w + i), e);

        __m256d a = _mm256_mul_pd(q1x, x);
        a = _mm256_fmadd_pd(q1y, y, a);
        a = _mm256_fmadd_pd(q1z, z, a);
        a = _mm256_mul_pd(a, il2);

        __m256d b = _mm256_mul_pd(q2x, x);
        b = _mm256_fmadd_pd(q2y, y, b);
        b = _mm256_fmadd_pd(q2z, z, b);
        b = _mm256_mul_pd(b, il2);

        acc_g = _mm256_add_pd(acc_g, we);
        acc_d1 = _mm256_fmadd_pd(we, a, acc_d1);
        acc_d2 = _mm256_fmadd_pd(we, _mm256_fmadd_pd(a, a, b), acc_d2);
    }

    MixtureDerivs out;
    out.g = hsum4(acc_g);
    out.d1 = hsum4(acc_d1);
    out.d2 = hsum4(acc_d2);
    for (; i < n; ++i) {
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

void bilinear_many_avx2(const double* img, int width, int height,
                        const double* u, const double* v, std::size_t n,
                        double* out) {
    const __m256d wf = _mm256_set1_pd(static_cast<double>(width));
    const __m256d vmax = _mm256_set1_pd(static_cast<double>(height - 1));
    const __m256d y0max = _mm256_set1_pd(static_cast<double>(std::max(height - 2, 0)));
    const __m256d zero = _mm256_setzero_pd();
    const __m128i wi = _mm_set1_epi32(width);
    const __m128i y1max = _mm_set1_epi32(height - 1);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d uu = _mm256_loadu_pd(u + i);
        const __m256d quot = _mm256_round_pd(_mm256_div_pd(uu, wf),
                                             _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
        uu = _mm256_fnmadd_pd(quot, wf, uu);
        // fnmadd can leave uu == W for u a hair below a multiple of W
        const __m256d over = _mm256_cmp_pd(uu, wf, _CMP_GE_OQ);
        uu = _mm256_sub_pd(uu, _mm256_and_pd(over, wf));
        uu = _mm256_max_pd(uu, zero);

        __m256d vv = _mm256_loadu_pd(v + i);
        vv = _mm256_max_pd(zero, _mm256_min_pd(vv, vmax));

        const __m256d x0f = _mm256_round_pd(uu, _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
        const __m256d fx = _mm256_sub_pd(uu, x0f);
        __m256d y0f = _mm256_round_pd(vv, _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
        y0f = _mm256_min_pd(y0f, y0max);
        const __m256d fy = _mm256_sub_pd(vv, y0f);

        const __m128i x0 = _mm256_cvtpd_epi32(x0f);
        const __m128i y0 = _mm256_cvtpd_epi32(y0f);
        __m128i x1 = _mm_add_epi32(x0, _mm_set1_epi32(1));
        x1 = _mm_andnot_si128(_mm_cmpeq_epi32(x1, wi), x1);  // wrap W -> 0
        const __m128i y1 = _mm_min_epi32(_mm_add_epi32(y0, _mm_set1_epi32(1)), y1max);

        const __m128i row0 = _mm_mullo_epi32(y0, wi);
        const __m128i row1 = _mm_mullo_epi32(y1, wi);
        const __m256d i00 = _mm256_i32gather_pd(img, _mm_add_epi32(row0, x0), 8);
        const __m256d i01 = _mm256_i32gather_pd(img, _mm_add_epi32(row0, x1), 8);
        const __m256d i10 = _mm256_i32gather_pd(img, _mm_add_epi32(row1, x0), 8);
        const __m256d i11 = _mm256_i32gather_pd(img, _mm_add_epi32(row1, x1), 8);

        const __m256d one = _mm256_set1_pd(1.0);
        const __m256d gx = _mm256_sub_pd(one, fx);
        const __m256d gy = _mm256_sub_pd(one, fy);
        const __m256d top = _mm256_fmadd_pd(fx, i01, _mm256_mul_pd(gx, i00));
        const __m256d bot = _mm256_fmadd_pd(fx, i11, _mm256_mul_pd(gx, i10));
        _mm256_storeu_pd(out + i, _mm256_fmadd_pd(fy, bot, _mm256_mul_pd(gy, top)));
    }

    if (i < n) {
        scalar_backend().bilinear_many(img, width, height, u + i, v + i, n - i, out + i);
    }
}

// atan on [0,1] as t * P(t^2); degree-14 Chebyshev-fitted P, max error
// ~1.8e-13 rad over the interval.
inline __m256d atan_poly4(__m256d t) {
    const __m256d s = _mm256_mul_pd(t, t);
    __m256d p = _mm256_set1_pd(1.74993295978209332e-04);
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(-1.49858244810548722e-03));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(6.03673420542581978e-03));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(-1.54184158956155830e-02));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(2.86359812453441907e-02));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(-4.25123286979107590e-02));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(5.46921751891083496e-02));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(-6.54075512082076260e-02));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(7.66447913470787029e-02));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(-9.08661509199797240e-02));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.11106730560799102e-01));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(-1.42856871170051497e-01));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(1.99999991111941916e-01));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(-3.33333333217927130e-01));
    p = _mm256_fmadd_pd(p, s, _mm256_set1_pd(9.99999999999750422e-01));
    return _mm256_mul_pd(t, p);
}

inline __m256d atan2_pd4(__m256d y, __m256d x) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    const __m256d ay = _mm256_andnot_pd(sign_mask, y);
    const __m256d ax = _mm256_andnot_pd(sign_mask, x);
    const __m256d hi = _mm256_max_pd(ay, ax);
    const __m256d lo = _mm256_min_pd(ay, ax);
    const __m256d safe_hi = _mm256_max_pd(hi, _mm256_set1_pd(1e-300));
    __m256d base = atan_poly4(_mm256_div_pd(lo, safe_hi));

    const __m256d swap = _mm256_cmp_pd(ay, ax, _CMP_GT_OQ);
    base = _mm256_blendv_pd(base, _mm256_sub_pd(_mm256_set1_pd(M_PI_2), base), swap);
    const __m256d neg_x = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ);
    base = _mm256_blendv_pd(base, _mm256_sub_pd(_mm256_set1_pd(M_PI), base), neg_x);
    return _mm256_or_pd(base, _mm256_and_pd(y, sign_mask));  // copysign from y
}

struct PhotoSample {
    __m256d val, du, dv, vraw, c2;
    __m256d yx, yy, yz;  // rotated direction
};

// Shared projection + bilinear fetch for the photometric passes; vraw is the
// pre-clamp row coordinate used by the pole guard.
inline PhotoSample photo_sample4(const double* img, int width, int height,
                                 const double r[9], const double* vx,
                                 const double* vy, const double* vz, std::size_t i) {
    const __m256d x = _mm256_loadu_pd(vx + i);
    const __m256d y = _mm256_loadu_pd(vy + i);
    const __m256d z = _mm256_loadu_pd(vz + i);

    __m256d yx = _mm256_mul_pd(_mm256_set1_pd(r[0]), x);
    yx = _mm256_fmadd_pd(_mm256_set1_pd(r[1]), y, yx);
    yx = _mm256_fmadd_pd(_mm256_set1_pd(r[2]), z, yx);
    __m256d yy = _mm256_mul_pd(_mm256_set1_pd(r[3]), x);
    yy = _mm256_fmadd_pd(_mm256_set1_pd(r[4]), y, yy);
    yy = _mm256_fmadd_pd(_mm256_set1_pd(r[5]), z, yy);
    __m256d yz = _mm256_mul_pd(_mm256_set1_pd(r[6]), x);
    yz = _mm256_fmadd_pd(_mm256_set1_pd(r[7]), y, yz);
    yz = _mm256_fmadd_pd(_mm256_set1_pd(r[8]), z, yz);

    const __m256d c2 =
        _mm256_fmadd_pd(yx, yx, _mm256_mul_pd(yy, yy));
    const __m256d c = _mm256_sqrt_pd(c2);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zc = _mm256_max_pd(_mm256_min_pd(yz, one),
                                     _mm256_sub_pd(_mm256_setzero_pd(), one));

    const __m256d phi = atan2_pd4(yy, yx);
    const __m256d theta = atan2_pd4(zc, c);

    const __m256d wf = _mm256_set1_pd(static_cast<double>(width));
    const __m256d hf = _mm256_set1_pd(static_cast<double>(height));
    const __m256d half = _mm256_set1_pd(0.5);

    __m256d u = _mm256_fmadd_pd(_mm256_add_pd(phi, _mm256_set1_pd(M_PI)),
                                _mm256_mul_pd(wf, _mm256_set1_pd(0.5 / M_PI)),
                                _mm256_sub_pd(_mm256_setzero_pd(), half));
    const __m256d under = _mm256_cmp_pd(u, _mm256_setzero_pd(), _CMP_LT_OQ);
    u = _mm256_add_pd(u, _mm256_and_pd(under, wf));
    const __m256d over = _mm256_cmp_pd(u, wf, _CMP_GE_OQ);
    u = _mm256_sub_pd(u, _mm256_and_pd(over, wf));

    const __m256d vraw = _mm256_fmadd_pd(
        _mm256_sub_pd(_mm256_set1_pd(M_PI_2), theta),
        _mm256_mul_pd(hf, _mm256_set1_pd(1.0 / M_PI)),
        _mm256_sub_pd(_mm256_setzero_pd(), half));
    const __m256d vmax = _mm256_set1_pd(static_cast<double>(height - 1));
    const __m256d vv = _mm256_max_pd(_mm256_setzero_pd(), _mm256_min_pd(vraw, vmax));

    const __m256d x0f = _mm256_round_pd(u, _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    const __m256d fx = _mm256_sub_pd(u, x0f);
    __m256d y0f = _mm256_round_pd(vv, _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    y0f = _mm256_min_pd(y0f, _mm256_set1_pd(static_cast<double>(
                                 height >= 2 ? height - 2 : 0)));
    const __m256d fy = _mm256_sub_pd(vv, y0f);

    const __m128i wi = _mm_set1_epi32(width);
    const __m128i x0 = _mm256_cvtpd_epi32(x0f);
    const __m128i y0 = _mm256_cvtpd_epi32(y0f);
    __m128i x1 = _mm_add_epi32(x0, _mm_set1_epi32(1));
    x1 = _mm_andnot_si128(_mm_cmpeq_epi32(x1, wi), x1);
    const __m128i y1 =
        _mm_min_epi32(_mm_add_epi32(y0, _mm_set1_epi32(1)), _mm_set1_epi32(height - 1));

    const __m128i row0 = _mm_mullo_epi32(y0, wi);
    const __m128i row1 = _mm_mullo_epi32(y1, wi);
    const __m256d i00 = _mm256_i32gather_pd(img, _mm_add_epi32(row0, x0), 8);
    const __m256d i01 = _mm256_i32gather_pd(img, _mm_add_epi32(row0, x1), 8);
    const __m256d i10 = _mm256_i32gather_pd(img, _mm_add_epi32(row1, x0), 8);
    const __m256d i11 = _mm256_i32gather_pd(img, _mm_add_epi32(row1, x1), 8);

    const __m256d gx = _mm256_sub_pd(one, fx);
    const __m256d gy = _mm256_sub_pd(one, fy);
    const __m256d top = _mm256_fmadd_pd(fx, i01, _mm256_mul_pd(gx, i00));
    const __m256d bot = _mm256_fmadd_pd(fx, i11, _mm256_mul_pd(gx, i10));

    PhotoSample out;
    out.val = _mm256_fmadd_pd(fy, bot, _mm256_mul_pd(gy, top));
    out.du = _mm256_fmadd_pd(fy, _mm256_sub_pd(i11, i10),
                             _mm256_mul_pd(gy, _mm256_sub_pd(i01, i00)));
    out.dv = _mm256_sub_pd(bot, top);
    out.vraw = vraw;
    out.c2 = c2;
    out.yx = yx;
    out.yy = yy;
    out.yz = yz;
    return out;
}

void photo_normal_avx2(const double* img, int width, int height, const double r[9],
                       const double* vx, const double* vy, const double* vz,
                       const double* a, std::size_t n, PhotoNormal* out) {
    __m256d cost = _mm256_setzero_pd();
    __m256d jtj[6], jtr[3];
    for (auto& acc : jtj) acc = _mm256_setzero_pd();
    for (auto& acc : jtr) acc = _mm256_setzero_pd();

    const __m256d su_scale = _mm256_set1_pd(width / (2.0 * M_PI));
    const __m256d sv_scale = _mm256_set1_pd(-height / M_PI);
    const __m256d guard_lo = _mm256_set1_pd(0.5);
    const __m256d guard_hi = _mm256_set1_pd(height - 1.5);
    const __m256d c2_min = _mm256_set1_pd(1e-12);
    const __m256d one = _mm256_set1_pd(1.0);

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const PhotoSample s = photo_sample4(img, width, height, r, vx, vy, vz, i);
        const __m256d res = _mm256_sub_pd(_mm256_loadu_pd(a + i), s.val);
        cost = _mm256_fmadd_pd(res, res, cost);

        __m256d keep = _mm256_and_pd(
            _mm256_cmp_pd(s.vraw, guard_lo, _CMP_GE_OQ),
            _mm256_cmp_pd(s.vraw, guard_hi, _CMP_LE_OQ));
        keep = _mm256_and_pd(keep, _mm256_cmp_pd(s.c2, c2_min, _CMP_GE_OQ));

        const __m256d safe_c2 = _mm256_max_pd(s.c2, c2_min);
        const __m256d su =
            _mm256_div_pd(_mm256_mul_pd(s.du, su_scale), safe_c2);
        const __m256d sv = _mm256_div_pd(_mm256_mul_pd(s.dv, sv_scale),
                                         _mm256_sqrt_pd(safe_c2));

        // g = su * (-yy, yx, 0) + sv * (-yz yx, -yz yy, 1 - yz^2)
        const __m256d neg_yz = _mm256_sub_pd(_mm256_setzero_pd(), s.yz);
        const __m256d gx = _mm256_fmadd_pd(sv, _mm256_mul_pd(neg_yz, s.yx),
                                           _mm256_mul_pd(su, _mm256_sub_pd(
                                                                 _mm256_setzero_pd(),
                                                                 s.yy)));
        const __m256d gy = _mm256_fmadd_pd(sv, _mm256_mul_pd(neg_yz, s.yy),
                                           _mm256_mul_pd(su, s.yx));
        const __m256d gz =
            _mm256_mul_pd(sv, _mm256_fnmadd_pd(s.yz, s.yz, one));

        // j = g x y, masked by the pole guard
        __m256d jx = _mm256_fmsub_pd(gy, s.yz, _mm256_mul_pd(gz, s.yy));
        __m256d jy = _mm256_fmsub_pd(gz, s.yx, _mm256_mul_pd(gx, s.yz));
        __m256d jz = _mm256_fmsub_pd(gx, s.yy, _mm256_mul_pd(gy, s.yx));
        jx = _mm256_and_pd(jx, keep);
        jy = _mm256_and_pd(jy, keep);
        jz = _mm256_and_pd(jz, keep);

        jtj[0] = _mm256_fmadd_pd(jx, jx, jtj[0]);
        jtj[1] = _mm256_fmadd_pd(jx, jy, jtj[1]);
        jtj[2] = _mm256_fmadd_pd(jx, jz, jtj[2]);
        jtj[3] = _mm256_fmadd_pd(jy, jy, jtj[3]);
        jtj[4] = _mm256_fmadd_pd(jy, jz, jtj[4]);
        jtj[5] = _mm256_fmadd_pd(jz, jz, jtj[5]);
        jtr[0] = _mm256_fmadd_pd(jx, res, jtr[0]);
        jtr[1] = _mm256_fmadd_pd(jy, res, jtr[1]);
        jtr[2] = _mm256_fmadd_pd(jz, res, jtr[2]);
    }

    *out = PhotoNormal{};
    out->cost = hsum4(cost);
    for (int k = 0; k < 6; ++k) out->jtj[k] = hsum4(jtj[k]);
    for (int k = 0; k < 3; ++k) out->jtr[k] = hsum4(jtr[k]);
    if (i < n) {
        PhotoNormal tail;
        scalar_backend().photo_normal_pass(img, width, height, r, vx + i, vy + i,
                                           vz + i, a + i, n - i, &tail);
        out->cost += tail.cost;
        for (int k = 0; k < 6; ++k) out->jtj[k] += tail.jtj[k];
        for (int k = 0; k < 3; ++k) out->jtr[k] += tail.jtr[k];
    }
}

double photo_cost_avx2(const double* img, int width, int height, const double r[9],
                       const double* vx, const double* vy, const double* vz,
                       const double* a, std::size_t n) {
    __m256d cost = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const PhotoSample s = photo_sample4(img, width, height, r, vx, vy, vz, i);
        const __m256d res = _mm256_sub_pd(_mm256_loadu_pd(a + i), s.val);
        cost = _mm256_fmadd_pd(res, res, cost);
    }
    double total = hsum4(cost);
    if (i < n) {
        total += scalar_backend().photo_cost_pass(img, width, height, r, vx + i,
                                                  vy + i, vz + i, a + i, n - i);
    }
    return total;
}

double ssd_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double tail = 0.0;
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        tail += d * d;
    }
    return hsum4(acc) + tail;
}

const Backend kAvx2 = {
    "avx2",
    mixture_value_avx2,
    mixture_derivs_avx2,
    bilinear_many_avx2,
    ssd_avx2,
    photo_normal_avx2,
    photo_cost_avx2,
};

}  // namespace

const Backend* avx2_backend() {
    static const bool supported =
        __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &kAvx2 : nullptr;
}

}  // namespace vgyro::kernels

#else

namespace vgyro::kernels {
const Backend* avx2_backend() { return nullptr; }
}  // namespace vgyro::kernels

#endif
