// AArch64 variant. NEON is mandatory on AArch64, so no runtime check is needed.

#include <arm_neon.h>

#include "tci/simd.hpp"
#include "step.hpp"

namespace tci::simd::detail {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void relu_neon(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void sign_step_neon(const double* x, const double* g, double eps, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = sign_step_one(x[i], g[i], eps);
}

}  // namespace

const KernelTable& neon_table() {
    static const KernelTable table{"neon", dot_neon, axpy_neon, relu_neon, sign_step_neon};
    return table;
}

}  // namespace tci::simd::detail
