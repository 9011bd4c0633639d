// Compiled with -mavx2 -mfma; only reached after the runtime CPU check in
// dispatch.cpp.

#include <immintrin.h>

#include "tci/simd.hpp"
#include "step.hpp"

namespace tci::simd::detail {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        __m256d y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void relu_avx2(const double* x, double* y, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // max_pd returns the second operand for NaN input, matching the scalar rule.
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void sign_step_avx2(const double* x, const double* g, double eps, double* y, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d sign_bit = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        const __m256d pos = _mm256_and_pd(_mm256_cmp_pd(vg, zero, _CMP_GT_OQ), one);
        const __m256d neg = _mm256_and_pd(_mm256_cmp_pd(vg, zero, _CMP_LT_OQ), one);
        const __m256d step = _mm256_mul_pd(veps, _mm256_sub_pd(pos, neg));
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vy = _mm256_add_pd(vx, step);
        _mm256_storeu_pd(y + i, vy);
        const __m256d dist = _mm256_andnot_pd(sign_bit, _mm256_sub_pd(vy, vx));
        if (_mm256_movemask_pd(_mm256_cmp_pd(dist, veps, _CMP_GT_OQ)) != 0) {
            for (std::size_t k = i; k < i + 4; ++k) y[k] = bounded_step(x[k], y[k], eps);
        }
    }
    for (; i < n; ++i) y[i] = sign_step_one(x[i], g[i], eps);
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{"avx2", dot_avx2, axpy_avx2, relu_avx2, sign_step_avx2};
    return table;
}

}  // namespace tci::simd::detail
