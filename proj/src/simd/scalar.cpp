#include "tci/simd.hpp"
#include "step.hpp"

namespace tci::simd {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void relu_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void sign_step_scalar(const double* x, const double* g, double eps, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = detail::sign_step_one(x[i], g[i], eps);
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", dot_scalar, axpy_scalar, relu_scalar, sign_step_scalar};
    return table;
}

}  // namespace tci::simd
