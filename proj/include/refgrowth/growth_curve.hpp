#pragma once

#include <limits>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace refgrowth {

/// P(t) = start_count + rate * (t - t0)
struct LinearGrowth {
    double rate = 0.0;
    double start_count = 0.0;
};

/// P(t) = sum_i coefficients[i] * (t - t0)^i; coefficients must be nonnegative
/// so the curve is nondecreasing on [t0, inf).
struct PolynomialGrowth {
    std::vector<double> coefficients;
};

/// P(t) = scale * exp(rate * t). The only variant allowed an infinite origin.
struct ExponentialGrowth {
    double scale = 1.0;
    double rate = 0.0;
};

/// Yearly cumulative counts with piecewise-linear interpolation.
struct TabulatedGrowth {
    std::vector<double> years;
    std::vector<double> counts;
};

/// Cumulative publication count P(t) together with the observation origin t0.
///
/// Restricted quantities count only what was published at t0 or later:
/// P*(t) = P(t) - P(t0). For the exponential variant with t0 = -inf,
/// P*(t) = P(t).
class GrowthCurve {
public:
    using Variant = std::variant<LinearGrowth, PolynomialGrowth, ExponentialGrowth, TabulatedGrowth>;

    static GrowthCurve linear(double t0, double rate, double start_count = 0.0);
    static GrowthCurve polynomial(double t0, std::vector<double> coefficients);
    static GrowthCurve exponential(double scale, double rate,
                                   double t0 = -std::numeric_limits<double>::infinity());
    /// t0 defaults to the first tabulated year.
    static GrowthCurve tabulated(std::vector<double> years, std::vector<double> counts,
                                 std::optional<double> t0 = std::nullopt);

    const Variant& variant() const noexcept { return variant_; }
    std::string_view variant_name() const noexcept;

    double t0() const noexcept { return t0_; }
    bool has_finite_origin() const noexcept;
    double domain_begin() const noexcept;
    double domain_end() const noexcept;

    /// P(t). Throws DomainError outside [domain_begin, domain_end].
    double value(double t) const;
    /// P'(t); the right-hand slope on tabulated knots (left-hand on the last one).
    double rate(double t) const;
    /// P*(t) = P(t) - P(t0); requires t >= t0.
    double restricted(double t) const;
    /// Closed-form integral of P* over [t0, t].
    double restricted_integral(double t) const;

    /// Points in the open interval (a, b) where P' is discontinuous.
    std::vector<double> kinks(double a, double b) const;

private:
    GrowthCurve(Variant v, double t0);
    void check_domain(double t) const;

    Variant variant_;
    double t0_;
};

}  // namespace refgrowth
