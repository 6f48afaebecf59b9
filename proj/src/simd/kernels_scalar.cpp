// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "gspoison/simd/kernels.hpp"

namespace gspoison::simd::scalar {

double kde_contract(const KdeRow* rows, std::size_t row_count, const double* rho, const double* gx, const double* gy,
                    const double* gz) {
    double total = 0.0;
    for (std::size_t r = 0; r < row_count; ++r) {
        const KdeRow& row = rows[r];
        const double w = gx[row.i] * gy[row.j];
        if (w == 0.0) continue;
        const double* cells = rho + row.offset;
        double dot = 0.0;
        for (int k = row.k_begin; k < row.k_end; ++k) dot += cells[k - row.k_begin] * gz[k];
        total += w * dot;
    }
    return total;
}

void splat_row(const SplatParams& s, double v_center, int u_begin, int u_end, PixelRow row) {
    const double dy = s.mean_v - v_center;
    for (int u = u_begin; u < u_end; ++u) {
        if (row.done[u]) continue;
        const double dx = s.mean_u - (u + 0.5);
        const double power = -0.5 * (s.conic_a * dx * dx + s.conic_c * dy * dy) - s.conic_b * dx * dy;
        if (power > 0.0) continue;
        const double alpha = std::min(kMaxAlpha, s.opacity * std::exp(power));
        if (alpha < kMinAlpha) continue;
        const double t = row.transmittance[u];
        const double next_t = t * (1.0 - alpha);
        if (next_t < kMinTransmittance) {
            row.done[u] = 1;
            continue;
        }
        const double w = alpha * t;
        row.red[u] += w * s.color[0];
        row.green[u] += w * s.color[1];
        row.blue[u] += w * s.color[2];
        row.depth[u] += w * s.depth;
        row.transmittance[u] = next_t;
    }
}

} // namespace gspoison::simd::scalar
