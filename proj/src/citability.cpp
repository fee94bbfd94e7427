#include "refgrowth/citability.hpp"

#include <algorithm>
#include <cmath>

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

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// Antiderivatives of a^n (alpha + beta a) e^{-ka} for n = 0, 1.
double antiderivative0(double alpha, double beta, double k, double a) {
    return -std::exp(-k * a) * ((alpha + beta * a) / k + beta / (k * k));
}

double antiderivative1(double alpha, double beta, double k, double a) {
    const double e = std::exp(-k * a);
    const double first = -e * (a / k + 1.0 / (k * k));
    const double second = -e * (a * a / k + 2.0 * a / (k * k) + 2.0 / (k * k * k));
    return alpha * first + beta * second;
}

void check_rate(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw DomainError(fmt::format("kernel transform needs a growth rate k > 0 (got {}); the integral diverges", k));
    }
}

}  // namespace

CitabilityFunction CitabilityFunction::constant(double q) {
    if (!is_probability(q)) throw ConfigError("kernel.q: must lie in [0, 1]");
    return CitabilityFunction(ConstantKernel{q});
}

CitabilityFunction CitabilityFunction::exponential_decay(double q0, double decay) {
    if (!is_probability(q0)) throw ConfigError("kernel.q0: must lie in [0, 1]");
    if (!(decay >= 0.0) || !std::isfinite(decay)) throw ConfigError("kernel.lambda: must be finite and >= 0");
    return CitabilityFunction(ExponentialDecayKernel{q0, decay});
}

CitabilityFunction CitabilityFunction::tabulated(std::vector<double> ages, std::vector<double> probabilities) {
    if (ages.size() != probabilities.size()) throw ConfigError("kernel.table: ages and probabilities differ in length");
    if (ages.empty()) throw ConfigError("kernel.table: need at least one row");
    if (ages.front() != 0.0) throw ConfigError("kernel.table: first age must be 0");
    for (std::size_t i = 0; i < ages.size(); ++i) {
        if (!is_probability(probabilities[i])) {
            throw ConfigError(fmt::format("kernel.table row {}: probability outside [0, 1]", i + 1));
        }
        if (i > 0 && !(ages[i] > ages[i - 1])) {
            throw ConfigError(fmt::format("kernel.table row {}: ages must be strictly increasing", i + 1));
        }
    }
    return CitabilityFunction(TabulatedKernel{std::move(ages), std::move(probabilities)});
}

std::string_view CitabilityFunction::variant_name() const noexcept {
    return std::visit(overloaded{
                          [](const ConstantKernel&) { return std::string_view("constant"); },
                          [](const ExponentialDecayKernel&) { return std::string_view("exponential_decay"); },
                          [](const TabulatedKernel&) { return std::string_view("tabulated"); },
                      },
                      variant_);
}

double CitabilityFunction::operator()(double age) const {
    if (!(age >= 0.0)) throw DomainError(fmt::format("citability evaluated at negative age {}", age));
    return std::visit(overloaded{
                          [](const ConstantKernel& k) { return k.q; },
                          [&](const ExponentialDecayKernel& k) { return k.q0 * std::exp(-k.decay * age); },
                          [&](const TabulatedKernel& k) {
                              if (age > k.ages.back()) return 0.0;
                              if (k.ages.size() == 1) return k.probabilities.front();
                              auto it = std::upper_bound(k.ages.begin(), k.ages.end(), age);
                              const std::size_t i =
                                  std::min(static_cast<std::size_t>(it - k.ages.begin()) - 1, k.ages.size() - 2);
                              const double w = (age - k.ages[i]) / (k.ages[i + 1] - k.ages[i]);
                              return k.probabilities[i] + w * (k.probabilities[i + 1] - k.probabilities[i]);
                          },
                      },
                      variant_);
}

std::optional<double> CitabilityFunction::constant_value() const noexcept {
    if (const auto* k = std::get_if<ConstantKernel>(&variant_)) return k->q;
    return std::nullopt;
}

std::vector<double> CitabilityFunction::kinks() const {
    if (const auto* k = std::get_if<TabulatedKernel>(&variant_)) return k->ages;
    return {};
}

double CitabilityFunction::laplace(double k) const {
    check_rate(k);
    return std::visit(overloaded{
                          [&](const ConstantKernel& c) { return c.q / k; },
                          [&](const ExponentialDecayKernel& c) { return c.q0 / (k + c.decay); },
                          [&](const TabulatedKernel& c) {
                              double sum = 0.0;
                              for (std::size_t i = 0; i + 1 < c.ages.size(); ++i) {
                                  const double beta = (c.probabilities[i + 1] - c.probabilities[i]) /
                                                      (c.ages[i + 1] - c.ages[i]);
                                  const double alpha = c.probabilities[i] - beta * c.ages[i];
                                  sum += antiderivative0(alpha, beta, k, c.ages[i + 1]) -
                                         antiderivative0(alpha, beta, k, c.ages[i]);
                              }
                              return sum;
                          },
                      },
                      variant_);
}

double CitabilityFunction::laplace_first_moment(double k) const {
    check_rate(k);
    return std::visit(overloaded{
                          [&](const ConstantKernel& c) { return c.q / (k * k); },
                          [&](const ExponentialDecayKernel& c) {
                              const double s = k + c.decay;
                              return c.q0 / (s * s);
                          },
                          [&](const TabulatedKernel& c) {
                              double sum = 0.0;
                              for (std::size_t i = 0; i + 1 < c.ages.size(); ++i) {
                                  const double beta = (c.probabilities[i + 1] - c.probabilities[i]) /
                                                      (c.ages[i + 1] - c.ages[i]);
                                  const double alpha = c.probabilities[i] - beta * c.ages[i];
                                  sum += antiderivative1(alpha, beta, k, c.ages[i + 1]) -
                                         antiderivative1(alpha, beta, k, c.ages[i]);
                              }
                              return sum;
                          },
                      },
                      variant_);
}

}  // namespace refgrowth
