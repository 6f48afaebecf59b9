// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string>

#include "gspoison/error.hpp"
#include "gspoison/simd/kernels.hpp"

namespace gspoison::simd {

namespace {

constexpr KernelTable kScalarTable{Backend::Scalar, "scalar", &scalar::kde_contract, &scalar::splat_row};

#if defined(GSPOISON_HAVE_AVX2_KERNELS)
constexpr KernelTable kAvx2Table{Backend::Avx2, "avx2", &avx2::kde_contract, &avx2::splat_row};
#endif

bool cpu_has_avx2() {
#if defined(GSPOISON_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend initial_backend() {
    if (const char* env = std::getenv("GSPOISON_SIMD")) {
        try {
            const Backend wanted = parse_backend(env);
            if (backend_available(wanted)) return wanted;
        } catch (const ContractError&) {
            // unknown name: fall through to detection
        }
    }
    return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<const KernelTable*>& active_table() {
    static std::atomic<const KernelTable*> table{&kernels(initial_backend())};
    return table;
}

} // namespace

bool backend_available(Backend b) {
    switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return cpu_has_avx2();
    }
    return false;
}

const KernelTable& kernels(Backend b) {
#if defined(GSPOISON_HAVE_AVX2_KERNELS)
    if (b == Backend::Avx2 && cpu_has_avx2()) return kAvx2Table;
#endif
    if (b != Backend::Scalar) throw ContractError("SIMD backend not available on this CPU");
    return kScalarTable;
}

const KernelTable& kernels() { return *active_table().load(std::memory_order_acquire); }

void set_backend(Backend b) { active_table().store(&kernels(b), std::memory_order_release); }

Backend active_backend() { return kernels().backend; }

Backend parse_backend(std::string_view name) {
    if (name == "scalar") return Backend::Scalar;
    if (name == "avx2") return Backend::Avx2;
    throw ContractError("unknown SIMD backend '" + std::string(name) + "' (expected scalar or avx2)");
}

} // namespace gspoison::simd
