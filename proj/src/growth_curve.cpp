#include "refgrowth/growth_curve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "refgrowth/error.hpp"

namespace refgrowth {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double horner(const std::vector<double>& c, double x) {
    double y = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) y = y * x + *it;
    return y;
}

// Index i with years[i] <= t < years[i+1], clamped to the last segment.
std::size_t segment_index(const std::vector<double>& years, double t) {
    auto it = std::upper_bound(years.begin(), years.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(years.begin(), it));
    if (i == 0) return 0;
    return std::min(i - 1, years.size() - 2);
}

double interpolate(const TabulatedGrowth& g, double t) {
    const std::size_t i = segment_index(g.years, t);
    const double w = (t - g.years[i]) / (g.years[i + 1] - g.years[i]);
    if (t == g.years[i]) return g.counts[i];
    if (t == g.years[i + 1]) return g.counts[i + 1];
    return g.counts[i] + w * (g.counts[i + 1] - g.counts[i]);
}

// Exact integral of the interpolant over [a, b] (inside the table).
double tabulated_integral(const TabulatedGrowth& g, double a, double b) {
    double sum = 0.0;
    double left = a;
    while (left < b) {
        const std::size_t i = segment_index(g.years, left);
        const double right = (i + 2 == g.years.size()) ? b : std::min(b, g.years[i + 1]);
        sum += 0.5 * (interpolate(g, left) + interpolate(g, right)) * (right - left);
        if (right <= left) break;
        left = right;
    }
    return sum;
}

}  // namespace

GrowthCurve::GrowthCurve(Variant v, double t0) : variant_(std::move(v)), t0_(t0) {}

GrowthCurve GrowthCurve::linear(double t0, double rate, double start_count) {
    if (!std::isfinite(t0)) throw ConfigError("growth.t0: linear growth needs a finite origin");
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw ConfigError("growth.rate: must be finite and >= 0");
    if (!(start_count >= 0.0) || !std::isfinite(start_count)) {
        throw ConfigError("growth.start_count: must be finite and >= 0");
    }
    return GrowthCurve(LinearGrowth{rate, start_count}, t0);
}

GrowthCurve GrowthCurve::polynomial(double t0, std::vector<double> coefficients) {
    if (!std::isfinite(t0)) throw ConfigError("growth.t0: polynomial growth needs a finite origin");
    if (coefficients.empty()) throw ConfigError("growth.coefficients: at least one coefficient required");
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        if (!(coefficients[i] >= 0.0) || !std::isfinite(coefficients[i])) {
            throw ConfigError(fmt::format("growth.coefficients[{}]: must be finite and >= 0", i));
        }
    }
    return GrowthCurve(PolynomialGrowth{std::move(coefficients)}, t0);
}

GrowthCurve GrowthCurve::exponential(double scale, double rate, double t0) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("growth.scale: must be finite and > 0");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("growth.k: must be finite and > 0");
    if (std::isnan(t0) || t0 == std::numeric_limits<double>::infinity()) {
        throw ConfigError("growth.t0: must be finite or -inf");
    }
    return GrowthCurve(ExponentialGrowth{scale, rate}, t0);
}

GrowthCurve GrowthCurve::tabulated(std::vector<double> years, std::vector<double> counts,
                                   std::optional<double> t0) {
    if (years.size() != counts.size()) throw ConfigError("growth.table: years and counts differ in length");
    if (years.size() < 2) throw ConfigError("growth.table: need at least two rows");
    for (std::size_t i = 0; i < years.size(); ++i) {
        if (!std::isfinite(years[i]) || !std::isfinite(counts[i])) {
            throw ConfigError(fmt::format("growth.table row {}: non-finite value", i + 1));
        }
        if (counts[i] < 0.0) throw ConfigError(fmt::format("growth.table row {}: negative count", i + 1));
        if (i > 0 && !(years[i] > years[i - 1])) {
            throw ConfigError(fmt::format("growth.table row {}: years must be strictly increasing", i + 1));
        }
        if (i > 0 && counts[i] < counts[i - 1]) {
            throw ConfigError(fmt::format("growth.table row {}: cumulative counts must be nondecreasing", i + 1));
        }
    }
    const double origin = t0.value_or(years.front());
    if (!(origin >= years.front() && origin <= years.back())) {
        throw ConfigError("growth.t0: origin must lie inside the tabulated range");
    }
    return GrowthCurve(TabulatedGrowth{std::move(years), std::move(counts)}, origin);
}

std::string_view GrowthCurve::variant_name() const noexcept {
    return std::visit(overloaded{
                          [](const LinearGrowth&) { return std::string_view("linear"); },
                          [](const PolynomialGrowth&) { return std::string_view("polynomial"); },
                          [](const ExponentialGrowth&) { return std::string_view("exponential"); },
                          [](const TabulatedGrowth&) { return std::string_view("tabulated"); },
                      },
                      variant_);
}

bool GrowthCurve::has_finite_origin() const noexcept { return std::isfinite(t0_); }

double GrowthCurve::domain_begin() const noexcept {
    return std::visit(overloaded{
                          [&](const ExponentialGrowth&) { return -std::numeric_limits<double>::infinity(); },
                          [&](const TabulatedGrowth& g) { return g.years.front(); },
                          [&](const auto&) { return t0_; },
                      },
                      variant_);
}

double GrowthCurve::domain_end() const noexcept {
    if (const auto* g = std::get_if<TabulatedGrowth>(&variant_)) return g->years.back();
    return std::numeric_limits<double>::infinity();
}

void GrowthCurve::check_domain(double t) const {
    if (std::isnan(t) || t < domain_begin() || t > domain_end()) {
        throw DomainError(fmt::format("growth curve ({}) evaluated at t={} outside [{}, {}]",
                                      variant_name(), t, domain_begin(), domain_end()));
    }
}

double GrowthCurve::value(double t) const {
    check_domain(t);
    return std::visit(overloaded{
                          [&](const LinearGrowth& g) { return g.start_count + g.rate * (t - t0_); },
                          [&](const PolynomialGrowth& g) { return horner(g.coefficients, t - t0_); },
                          [&](const ExponentialGrowth& g) { return g.scale * std::exp(g.rate * t); },
                          [&](const TabulatedGrowth& g) { return interpolate(g, t); },
                      },
                      variant_);
}

double GrowthCurve::rate(double t) const {
    check_domain(t);
    return std::visit(overloaded{
                          [&](const LinearGrowth& g) { return g.rate; },
                          [&](const PolynomialGrowth& g) {
                              const double x = t - t0_;
                              double y = 0.0;
                              for (std::size_t i = g.coefficients.size() - 1; i >= 1; --i) {
                                  y = y * x + static_cast<double>(i) * g.coefficients[i];
                              }
                              return y;
                          },
                          [&](const ExponentialGrowth& g) { return g.scale * g.rate * std::exp(g.rate * t); },
                          [&](const TabulatedGrowth& g) {
                              const std::size_t i = segment_index(g.years, t);
                              return (g.counts[i + 1] - g.counts[i]) / (g.years[i + 1] - g.years[i]);
                          },
                      },
                      variant_);
}

double GrowthCurve::restricted(double t) const {
    if (t < t0_) throw DomainError(fmt::format("restricted count needs t >= t0 (t={}, t0={})", t, t0_));
    check_domain(t);
    return std::visit(overloaded{
                          [&](const LinearGrowth& g) { return g.rate * (t - t0_); },
                          [&](const PolynomialGrowth& g) {
                              return horner(g.coefficients, t - t0_) - g.coefficients.front();
                          },
                          [&](const ExponentialGrowth& g) {
                              if (!std::isfinite(t0_)) return g.scale * std::exp(g.rate * t);
                              return g.scale * std::exp(g.rate * t0_) * std::expm1(g.rate * (t - t0_));
                          },
                          [&](const TabulatedGrowth& g) { return interpolate(g, t) - interpolate(g, t0_); },
                      },
                      variant_);
}

double GrowthCurve::restricted_integral(double t) const {
    if (t < t0_) throw DomainError(fmt::format("restricted integral needs t >= t0 (t={}, t0={})", t, t0_));
    check_domain(t);
    const double x = t - t0_;
    return std::visit(overloaded{
                          [&](const LinearGrowth& g) { return 0.5 * g.rate * x * x; },
                          [&](const PolynomialGrowth& g) {
                              double sum = 0.0;
                              for (std::size_t i = 1; i < g.coefficients.size(); ++i) {
                                  sum += g.coefficients[i] * std::pow(x, static_cast<double>(i + 1)) /
                                         static_cast<double>(i + 1);
                              }
                              return sum;
                          },
                          [&](const ExponentialGrowth& g) {
                              if (!std::isfinite(t0_)) return g.scale * std::exp(g.rate * t) / g.rate;
                              const double base = g.scale * std::exp(g.rate * t0_);
                              return base * (std::expm1(g.rate * x) / g.rate - x);
                          },
                          [&](const TabulatedGrowth& g) {
                              return tabulated_integral(g, t0_, t) - interpolate(g, t0_) * x;
                          },
                      },
                      variant_);
}

std::vector<double> GrowthCurve::kinks(double a, double b) const {
    std::vector<double> out;
    if (const auto* g = std::get_if<TabulatedGrowth>(&variant_)) {
        for (double y : g->years) {
            if (y > a && y < b) out.push_back(y);
        }
    }
    return out;
}

}  // namespace refgrowth
