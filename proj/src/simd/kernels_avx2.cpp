// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 -mfma; only called after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cstring>

#include "gspoison/simd/kernels.hpp"

namespace gspoison::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Cephes-style exp: range reduction by ln2, then a (2,3) Pade form.
inline __m256d exp_pd(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878E-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300E-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910E-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042E-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192E-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766E-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000009E0);

    x = _mm256_max_pd(_mm256_min_pd(x, _mm256_set1_pd(709.0)), _mm256_set1_pd(-708.0));
    const __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(fx, c1, x);
    r = _mm256_fnmadd_pd(fx, c2, r);
    const __m256d rr = _mm256_mul_pd(r, r);
    const __m256d px = _mm256_mul_pd(r, _mm256_fmadd_pd(_mm256_fmadd_pd(p0, rr, p1), rr, p2));
    const __m256d qx = _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_fmadd_pd(q0, rr, q1), rr, q2), rr, q3);
    __m256d y = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    y = _mm256_fmadd_pd(y, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

    const __m128i n32 = _mm256_cvtpd_epi32(fx);
    __m256i n64 = _mm256_cvtepi32_epi64(n32);
    n64 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(y, _mm256_castsi256_pd(n64));
}

struct LaneState {
    double* t;
    double* r;
    double* g;
    double* b;
    double* d;
    std::uint8_t* done;
};

inline void splat_lanes(const SplatParams& s, double dy, __m256d pixel_u, LaneState px) {
    const __m256d dx = _mm256_sub_pd(_mm256_set1_pd(s.mean_u), pixel_u);
    const __m256d vdy = _mm256_set1_pd(dy);
    // -0.5 * (a dx^2 + c dy^2) - b dx dy, evaluated in the scalar kernel's order
    const __m256d quad = _mm256_add_pd(_mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(s.conic_a), dx), dx),
                                       _mm256_mul_pd(_mm256_set1_pd(s.conic_c * dy), vdy));
    const __m256d power = _mm256_sub_pd(_mm256_mul_pd(_mm256_set1_pd(-0.5), quad),
                                        _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(s.conic_b), dx), vdy));
    const __m256d alpha = _mm256_min_pd(_mm256_set1_pd(kMaxAlpha), _mm256_mul_pd(_mm256_set1_pd(s.opacity), exp_pd(power)));

    std::int32_t done_bits;
    std::memcpy(&done_bits, px.done, 4);
    const __m256i done64 = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(done_bits));
    const __m256d not_done = _mm256_castsi256_pd(_mm256_cmpeq_epi64(done64, _mm256_setzero_si256()));

    const __m256d active = _mm256_and_pd(
        not_done, _mm256_and_pd(_mm256_cmp_pd(power, _mm256_setzero_pd(), _CMP_LE_OQ),
                                _mm256_cmp_pd(alpha, _mm256_set1_pd(kMinAlpha), _CMP_GE_OQ)));

    const __m256d t = _mm256_loadu_pd(px.t);
    const __m256d next_t = _mm256_mul_pd(t, _mm256_sub_pd(_mm256_set1_pd(1.0), alpha));
    const __m256d saturated = _mm256_cmp_pd(next_t, _mm256_set1_pd(kMinTransmittance), _CMP_LT_OQ);
    const __m256d terminate = _mm256_and_pd(active, saturated);
    const __m256d contrib = _mm256_andnot_pd(saturated, active);

    const __m256d w = _mm256_and_pd(contrib, _mm256_mul_pd(alpha, t));
    _mm256_storeu_pd(px.r, _mm256_add_pd(_mm256_loadu_pd(px.r), _mm256_mul_pd(w, _mm256_set1_pd(s.color[0]))));
    _mm256_storeu_pd(px.g, _mm256_add_pd(_mm256_loadu_pd(px.g), _mm256_mul_pd(w, _mm256_set1_pd(s.color[1]))));
    _mm256_storeu_pd(px.b, _mm256_add_pd(_mm256_loadu_pd(px.b), _mm256_mul_pd(w, _mm256_set1_pd(s.color[2]))));
    _mm256_storeu_pd(px.d, _mm256_add_pd(_mm256_loadu_pd(px.d), _mm256_mul_pd(w, _mm256_set1_pd(s.depth))));
    _mm256_storeu_pd(px.t, _mm256_blendv_pd(t, next_t, contrib));

    const int term_bits = _mm256_movemask_pd(terminate);
    if (term_bits)
        for (int l = 0; l < 4; ++l)
            if (term_bits & (1 << l)) px.done[l] = 1;
}

} // namespace

void exp_array(const double* in, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp_pd(_mm256_loadu_pd(in + i)));
    if (i < n) {
        double buf[4] = {0.0, 0.0, 0.0, 0.0};
        std::copy(in + i, in + n, buf);
        _mm256_storeu_pd(buf, exp_pd(_mm256_loadu_pd(buf)));
        std::copy(buf, buf + (n - i), out + i);
    }
}

double kde_contract(const KdeRow* rows, std::size_t row_count, const double* rho, const double* gx, const double* gy,
                    const double* gz) {
    double total = 0.0;
    for (std::size_t r = 0; r < row_count; ++r) {
        const KdeRow& row = rows[r];
        const double w = gx[row.i] * gy[row.j];
        if (w == 0.0) continue;
        const double* cells = rho + row.offset;
        const double* g = gz + row.k_begin;
        const int n = row.k_end - row.k_begin;
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        int k = 0;
        for (; k + 8 <= n; k += 8) {
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(cells + k), _mm256_loadu_pd(g + k), acc0);
            acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(cells + k + 4), _mm256_loadu_pd(g + k + 4), acc1);
        }
        for (; k + 4 <= n; k += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(cells + k), _mm256_loadu_pd(g + k), acc0);
        double dot = hsum(_mm256_add_pd(acc0, acc1));
        for (; k < n; ++k) dot += cells[k] * g[k];
        total += w * dot;
    }
    return total;
}

void splat_row(const SplatParams& s, double v_center, int u_begin, int u_end, PixelRow row) {
    const double dy = s.mean_v - v_center;
    int u = u_begin;
    for (; u + 4 <= u_end; u += 4) {
        const __m256d pixel_u = _mm256_add_pd(_mm256_set1_pd(u + 0.5), _mm256_set_pd(3.0, 2.0, 1.0, 0.0));
        splat_lanes(s, dy, pixel_u,
                    {row.transmittance + u, row.red + u, row.green + u, row.blue + u, row.depth + u, row.done + u});
    }
    if (u < u_end) {
        // Tail: stage into a padded buffer; padding lanes are marked done.
        const int n = u_end - u;
        double t[4] = {1, 1, 1, 1}, r[4] = {}, g[4] = {}, b[4] = {}, d[4] = {};
        std::uint8_t done[4] = {1, 1, 1, 1};
        for (int l = 0; l < n; ++l) {
            t[l] = row.transmittance[u + l];
            r[l] = row.red[u + l];
            g[l] = row.green[u + l];
            b[l] = row.blue[u + l];
            d[l] = row.depth[u + l];
            done[l] = row.done[u + l];
        }
        const __m256d pixel_u = _mm256_add_pd(_mm256_set1_pd(u + 0.5), _mm256_set_pd(3.0, 2.0, 1.0, 0.0));
        splat_lanes(s, dy, pixel_u, {t, r, g, b, d, done});
        for (int l = 0; l < n; ++l) {
            row.transmittance[u + l] = t[l];
            row.red[u + l] = r[l];
            row.green[u + l] = g[l];
            row.blue[u + l] = b[l];
            row.depth[u + l] = d[l];
            row.done[u + l] = done[l];
        }
    }
}

} // namespace gspoison::simd::avx2
