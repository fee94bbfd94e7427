#pragma once

// Test-only reference computations. Nothing here calls into the library's
// quadrature or root finding, so the checks stay independent.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "refgrowth/growth_curve.hpp"

namespace oracle {

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double sum = f(a) + f(b);
    for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

/// Smallest x in [lo, hi] with pred(x) true, for a predicate monotone false->true.
inline double bisect(const std::function<bool(double)>& pred, double lo, double hi, double tol = 1e-12) {
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (pred(mid) ? hi : lo) = mid;
    }
    return hi;
}

/// Random nondecreasing polynomial in (t - t0), degree 1..4, nonnegative coefficients.
inline refgrowth::GrowthCurve random_polynomial(std::mt19937_64& rng, double t0) {
    std::uniform_int_distribution<int> degree(1, 4);
    std::uniform_real_distribution<double> coef(0.0, 50.0);
    std::vector<double> c(static_cast<std::size_t>(degree(rng)) + 1);
    for (auto& v : c) v = coef(rng);
    c.back() += 1.0;
    return refgrowth::GrowthCurve::polynomial(t0, c);
}

/// Random tabulated yearly curve with positive increments.
inline refgrowth::GrowthCurve random_tabulated(std::mt19937_64& rng, double t0, int years) {
    std::uniform_real_distribution<double> step(10.0, 500.0);
    std::vector<double> y, c;
    double total = std::uniform_real_distribution<double>(0.0, 1000.0)(rng);
    for (int i = 0; i <= years; ++i) {
        y.push_back(t0 + i);
        c.push_back(total);
        total += step(rng);
    }
    return refgrowth::GrowthCurve::tabulated(y, c);
}

/// One curve of each variant in rotation.
inline refgrowth::GrowthCurve random_curve(std::mt19937_64& rng, int index, double t0, int years) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (index % 4) {
        case 0: return refgrowth::GrowthCurve::linear(t0, 10.0 + 990.0 * u(rng), 1000.0 * u(rng));
        case 1: return random_polynomial(rng, t0);
        case 2: return refgrowth::GrowthCurve::exponential(1.0 + 100.0 * u(rng), 0.02 + 0.3 * u(rng), t0);
        default: return random_tabulated(rng, t0, years);
    }
}

}  // namespace oracle
