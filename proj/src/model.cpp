#include "refgrowth/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "refgrowth/error.hpp"

namespace refgrowth::model {
namespace {

void require_observed(const GrowthCurve& P, double t) {
    if (std::isnan(t) || t < P.t0()) {
        throw DomainError(fmt::format("prediction time t={} precedes the origin t0={}", t, P.t0()));
    }
}

const ExponentialGrowth* infinite_history(const GrowthCurve& P) {
    if (P.has_finite_origin()) return nullptr;
    return std::get_if<ExponentialGrowth>(&P.variant());
}

// Partition of [t0, t] on which the integrand q(t-s) P'(s) is smooth.
std::vector<double> partition(const CitabilityFunction& q, const GrowthCurve& P, double t) {
    std::vector<double> points{P.t0(), t};
    for (double s : P.kinks(P.t0(), t)) points.push_back(s);
    for (double age : q.kinks()) {
        const double s = t - age;
        if (s > P.t0() && s < t) points.push_back(s);
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    return points;
}

double restricted_positive(const GrowthCurve& P, double t) {
    const double total = P.restricted(t);
    if (!(total > 0.0)) {
        throw DomainError(fmt::format("no citable articles: P*({}) = {}", t, total));
    }
    return total;
}

// Closed-form median where P* has an explicit inverse.
std::optional<double> closed_form_median(const GrowthCurve& P, double t) {
    const double window = t - P.t0();
    if (std::holds_alternative<LinearGrowth>(P.variant())) return 0.5 * window;

    if (const auto* g = std::get_if<PolynomialGrowth>(&P.variant())) {
        std::optional<std::size_t> degree;
        for (std::size_t i = 1; i < g->coefficients.size(); ++i) {
            if (g->coefficients[i] == 0.0) continue;
            if (degree) return std::nullopt;
            degree = i;
        }
        if (!degree) return std::nullopt;
        return window * (1.0 - std::pow(2.0, -1.0 / static_cast<double>(*degree)));
    }

    if (const auto* g = std::get_if<ExponentialGrowth>(&P.variant())) {
        if (!P.has_finite_origin()) return std::numbers::ln2 / g->rate;
        // P*(t-a) = P*(t)/2  <=>  e^{-ka} = (1 + e^{-k window}) / 2
        return (std::numbers::ln2 - std::log1p(std::exp(-g->rate * window))) / g->rate;
    }
    return std::nullopt;
}

}  // namespace

double exponential_growth_prediction(const CitabilityFunction& q, double scale, double rate, double t) {
    if (!(rate > 0.0)) {
        throw DomainError(fmt::format("exponential growth prediction needs k > 0 (got {})", rate));
    }
    return scale * rate * std::exp(rate * t) * q.laplace(rate);
}

double expected_list_length(const CitabilityFunction& q, const GrowthCurve& P, double t,
                            const QuadratureOptions& options) {
    if (const auto* g = infinite_history(P)) {
        if (const auto c = q.constant_value()) return *c * P.value(t);
        return exponential_growth_prediction(q, g->scale, g->rate, t);
    }
    require_observed(P, t);
    if (const auto c = q.constant_value()) return *c * P.restricted(t);
    return expected_list_length_quadrature(q, P, t, options);
}

double expected_list_length_quadrature(const CitabilityFunction& q, const GrowthCurve& P, double t,
                                       const QuadratureOptions& options) {
    if (!P.has_finite_origin()) throw DomainError("quadrature of L*(t) needs a finite origin t0");
    require_observed(P, t);
    if (t == P.t0()) return 0.0;

    const auto points = partition(q, P, t);
    const auto integrand = [&](double s) { return q(std::max(0.0, t - s)) * P.rate(s); };
    return integrate(integrand, points, options).value;
}

double expected_total_age(const CitabilityFunction& q, const GrowthCurve& P, double t,
                          const QuadratureOptions& options) {
    if (const auto* g = infinite_history(P)) {
        return g->scale * g->rate * std::exp(g->rate * t) * q.laplace_first_moment(g->rate);
    }
    require_observed(P, t);
    if (t == P.t0()) return 0.0;

    const auto points = partition(q, P, t);
    const auto integrand = [&](double s) {
        const double age = std::max(0.0, t - s);
        return age * q(age) * P.rate(s);
    };
    return integrate(integrand, points, options).value;
}

double expected_total_age_by_parts(const CitabilityFunction& q, const GrowthCurve& P, double t) {
    const auto c = q.constant_value();
    if (!c) throw DomainError("the integrated-curve form of A*(t) holds only for a constant kernel");
    if (P.has_finite_origin()) require_observed(P, t);
    return *c * P.restricted_integral(t);
}

double mean_reference_age(const GrowthCurve& P, double t) {
    if (P.has_finite_origin()) require_observed(P, t);
    const double total = restricted_positive(P, t);
    return P.restricted_integral(t) / total;
}

double median_reference_age(const GrowthCurve& P, double t, double tolerance) {
    if (P.has_finite_origin()) require_observed(P, t);
    const double total = restricted_positive(P, t);
    if (const auto exact = closed_form_median(P, t)) return *exact;

    const double half = 0.5 * total;
    double lo = 0.0;            // P*(t - lo) > half
    double hi = t - P.t0();     // P*(t - hi) <= half
    for (int iter = 0; iter < 200 && hi - lo > tolerance; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (P.restricted(t - mid) <= half) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

double age_survival_fraction(const GrowthCurve& P, double t, double a, SurvivalMode mode) {
    if (!(a >= 0.0)) throw DomainError(fmt::format("survival needs a nonnegative age (got {})", a));
    if (mode == SurvivalMode::full) {
        const double total = P.value(t);
        if (!(total > 0.0)) throw DomainError(fmt::format("survival undefined: P({}) = {}", t, total));
        if (a == 0.0) return 1.0;
        return P.value(t - a) / total;
    }

    if (P.has_finite_origin()) require_observed(P, t);
    const double total = restricted_positive(P, t);
    if (a == 0.0) return 1.0;
    const double s = std::max(t - a, P.t0());
    if (s == P.t0()) return 0.0;
    return P.restricted(s) / total;
}

AgeStatistics uniform_age_statistics(const GrowthCurve& P, double t, std::span<const double> ages) {
    AgeStatistics stats;
    stats.mean_age = mean_reference_age(P, t);
    stats.median_age = median_reference_age(P, t);
    if (!ages.empty()) {
        std::vector<SurvivalPoint> survival;
        survival.reserve(ages.size());
        for (double a : ages) survival.push_back({a, age_survival_fraction(P, t, a)});
        stats.survival = std::move(survival);
    }
    return stats;
}

}  // namespace refgrowth::model
