#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace refgrowth {

struct ConstantKernel {
    double q = 0.0;
};

/// q(a) = q0 * exp(-decay * a)
struct ExponentialDecayKernel {
    double q0 = 0.0;
    double decay = 0.0;
};

/// Piecewise-linear in age, starting at age 0; zero beyond the last age.
struct TabulatedKernel {
    std::vector<double> ages;
    std::vector<double> probabilities;
};

/// Citation probability q(a) for a single (citing, cited) pair at age a.
class CitabilityFunction {
public:
    using Variant = std::variant<ConstantKernel, ExponentialDecayKernel, TabulatedKernel>;

    static CitabilityFunction constant(double q);
    static CitabilityFunction exponential_decay(double q0, double decay);
    static CitabilityFunction tabulated(std::vector<double> ages, std::vector<double> probabilities);

    const Variant& variant() const noexcept { return variant_; }
    std::string_view variant_name() const noexcept;

    /// q(a) for a >= 0; throws DomainError for negative ages.
    double operator()(double age) const;

    /// The constant value when this is the uniform model.
    std::optional<double> constant_value() const noexcept;

    /// Ages at which q or its slope jumps (tabulated knots, including the cut-off).
    std::vector<double> kinks() const;

    /// Integral of q(a) * exp(-k a) over [0, inf), in closed form; k > 0.
    double laplace(double k) const;
    /// Integral of a * q(a) * exp(-k a) over [0, inf), in closed form; k > 0.
    double laplace_first_moment(double k) const;

private:
    explicit CitabilityFunction(Variant v) : variant_(std::move(v)) {}

    Variant variant_;
};

}  // namespace refgrowth
