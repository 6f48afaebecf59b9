// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Data-parallel inner loops with one scalar reference implementation and
// optional vector variants. The active table is picked at first use from
// CPU features; GSPOISON_SIMD=scalar|avx2 in the environment overrides it.

namespace gspoison::simd {

enum class Backend { Scalar, Avx2 };

/// One occupied run of the density grid: cells (i, j, k) for k in
/// [k_begin, k_end) stored contiguously starting at rho[offset].
struct KdeRow {
    int i = 0;
    int j = 0;
    int k_begin = 0;
    int k_end = 0;
    std::size_t offset = 0;
};

/// sum over rows of gx[i] * gy[j] * sum_k gz[k] * rho[offset + k - k_begin]
using KdeContractFn = double (*)(const KdeRow* rows, std::size_t row_count, const double* rho, const double* gx,
                                 const double* gy, const double* gz);

struct SplatParams {
    double mean_u = 0.0;
    double mean_v = 0.0;
    // inverse 2D covariance [a b; b c]
    double conic_a = 0.0;
    double conic_b = 0.0;
    double conic_c = 0.0;
    double opacity = 0.0;
    double color[3] = {0.0, 0.0, 0.0};
    double depth = 0.0;
};

/// Front-to-back compositing state for one image row, structure-of-arrays.
struct PixelRow {
    double* transmittance;
    double* red;
    double* green;
    double* blue;
    double* depth; // sum of w_i * z_i
    std::uint8_t* done;
};

inline constexpr double kMaxAlpha = 0.99;
inline constexpr double kMinAlpha = 1.0 / 255.0;
inline constexpr double kMinTransmittance = 1e-4;

/// Composites one splat into pixels [u_begin, u_end) of a row whose pixel
/// centers sit at v_center.
using SplatRowFn = void (*)(const SplatParams& splat, double v_center, int u_begin, int u_end, PixelRow row);

struct KernelTable {
    Backend backend;
    const char* name;
    KdeContractFn kde_contract;
    SplatRowFn splat_row;
};

bool backend_available(Backend b);
const KernelTable& kernels(Backend b);
/// The active table.
const KernelTable& kernels();
/// Throws ContractError if `b` is not available on this CPU.
void set_backend(Backend b);
Backend active_backend();
Backend parse_backend(std::string_view name);

// Individual implementations, exposed for equivalence tests.
namespace scalar {
double kde_contract(const KdeRow* rows, std::size_t row_count, const double* rho, const double* gx, const double* gy,
                    const double* gz);
void splat_row(const SplatParams& splat, double v_center, int u_begin, int u_end, PixelRow row);
} // namespace scalar

namespace avx2 {
double kde_contract(const KdeRow* rows, std::size_t row_count, const double* rho, const double* gx, const double* gy,
                    const double* gz);
void splat_row(const SplatParams& splat, double v_center, int u_begin, int u_end, PixelRow row);
/// Vector exp used by splat_row, applied elementwise (test hook).
void exp_array(const double* in, double* out, std::size_t n);
} // namespace avx2

} // namespace gspoison::simd
