#include "refgrowth/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "refgrowth/error.hpp"

namespace refgrowth {
namespace {

// Kronrod abscissae; odd indices are the Gauss points.
constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    double roundoff;  // error floor below which bisection cannot help

    bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gauss_kronrod(const Integrand& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const double fc = f(center);
    double kronrod = kKronrodWeights[7] * fc;
    double gauss = kGaussWeights[3] * fc;
    double abs_sum = std::abs(kronrod);

    for (int i = 0; i < 7; ++i) {
        const double dx = half * kNodes[i];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        kronrod += kKronrodWeights[i] * (f1 + f2);
        abs_sum += kKronrodWeights[i] * (std::abs(f1) + std::abs(f2));
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * (f1 + f2);
    }

    Segment s{a, b, kronrod * half, std::abs((kronrod - gauss) * half), 0.0};
    s.roundoff = 50.0 * std::numeric_limits<double>::epsilon() * abs_sum * std::abs(half);
    if (!std::isfinite(s.value)) {
        throw NumericError("quadrature: integrand is not finite on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "]");
    }
    return s;
}

}  // namespace

QuadratureResult integrate(const Integrand& f, double a, double b, const QuadratureOptions& options) {
    const std::array<double, 2> points{a, b};
    return integrate(f, std::span<const double>(points), options);
}

QuadratureResult integrate(const Integrand& f, std::span<const double> points,
                           const QuadratureOptions& options) {
    if (points.size() < 2) throw NumericError("quadrature: need at least two partition points");
    if (!std::is_sorted(points.begin(), points.end())) {
        throw NumericError("quadrature: partition points must be sorted");
    }

    std::priority_queue<Segment> heap;
    double total = 0.0;
    double total_error = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        if (points[i + 1] <= points[i]) continue;
        Segment s = gauss_kronrod(f, points[i], points[i + 1]);
        total += s.value;
        total_error += s.error;
        heap.push(s);
    }

    QuadratureResult result;
    while (!heap.empty()) {
        const double target = std::max(options.abs_tol, options.rel_tol * std::abs(total));
        if (total_error <= target) break;

        const Segment worst = heap.top();
        if (worst.error <= worst.roundoff) {
            // Everything that is left is rounding noise.
            break;
        }
        if (static_cast<int>(heap.size()) >= options.max_subintervals) {
            throw NumericError("quadrature: tolerance " + std::to_string(target) +
                               " not reached within " + std::to_string(options.max_subintervals) +
                               " subintervals (estimate " + std::to_string(total_error) + ")");
        }
        heap.pop();

        const double mid = 0.5 * (worst.a + worst.b);
        const Segment left = gauss_kronrod(f, worst.a, mid);
        const Segment right = gauss_kronrod(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift of the running updates.
    result.subintervals = static_cast<int>(heap.size());
    double value = 0.0;
    double error = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    result.value = value;
    result.error_estimate = error;
    return result;
}

}  // namespace refgrowth
