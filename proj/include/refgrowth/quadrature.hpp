#pragma once

#include <functional>
#include <span>

namespace refgrowth {

struct QuadratureOptions {
    double abs_tol = 1e-9;
    double rel_tol = 1e-12;
    int max_subintervals = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int subintervals = 0;
};

using Integrand = std::function<double(double)>;

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below max(abs_tol, rel_tol * |value|). Throws NumericError
/// when the subinterval budget runs out first.
QuadratureResult integrate(const Integrand& f, double a, double b,
                           const QuadratureOptions& options = {});

/// Same scheme, seeded with the partition given by `points` (sorted, first and
/// last are the integration limits). Used to keep kinks of piecewise-linear
/// curves and kernels on subinterval boundaries.
QuadratureResult integrate(const Integrand& f, std::span<const double> points,
                           const QuadratureOptions& options = {});

}  // namespace refgrowth
