#pragma once

// Dense inner-loop kernels used by the reference predictor.
//
// Every kernel has a portable scalar reference. Vector variants (AVX2+FMA on
// x86-64, NEON on AArch64) are selected once at first use from the running
// CPU; setting TCI_SIMD=scalar in the environment forces the reference path.
// Vector variants reassociate sums, so they agree with the scalar path to
// rounding, not bit for bit. Within one process the choice is fixed, which
// keeps seeded training reproducible.

#include <cstddef>
#include <string_view>

namespace tci::simd {

struct KernelTable {
    std::string_view name;
    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// y[i] = max(x[i], 0)
    void (*relu)(const double* x, double* y, std::size_t n);
    /// y[i] = x[i] + eps * sign(g[i]), sign(0) = 0
    void (*sign_step)(const double* x, const double* g, double eps, double* y, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// The table used by the library.
const KernelTable& active();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }

}  // namespace tci::simd
