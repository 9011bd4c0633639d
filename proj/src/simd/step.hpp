#pragma once

#include <cmath>

namespace tci::simd::detail {

// Pulls y toward x until the rounded |y - x| is at most eps.
inline double bounded_step(double x, double y, double eps) {
    while (std::abs(y - x) > eps) y = std::nextafter(y, x);
    return y;
}

inline double sign_step_one(double x, double g, double eps) {
    const double s = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
    return bounded_step(x, x + eps * s, eps);
}

}  // namespace tci::simd::detail
