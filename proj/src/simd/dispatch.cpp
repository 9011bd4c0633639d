#include <cstdlib>
#include <string_view>

#include "tci/simd.hpp"

namespace tci::simd {

namespace detail {
#if defined(TCI_BUILD_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(TCI_BUILD_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

const KernelTable* avx2_kernels() {
#if defined(TCI_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &detail::avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(TCI_BUILD_NEON)
    return &detail::neon_table();
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& table = [] () -> const KernelTable& {
        const char* forced = std::getenv("TCI_SIMD");
        if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
        if (const KernelTable* t = avx2_kernels()) return *t;
        if (const KernelTable* t = neon_kernels()) return *t;
        return scalar_kernels();
    }();
    return table;
}

}  // namespace tci::simd
