#pragma once

#include <optional>
#include <span>
#include <vector>

#include "refgrowth/citability.hpp"
#include "refgrowth/growth_curve.hpp"
#include "refgrowth/quadrature.hpp"

// Deterministic predictions of the Bernoulli citation model: every
// article published at time t cites every earlier article of age a
// independently with probability q(a).
namespace refgrowth::model {

struct SurvivalPoint {
    double age = 0.0;
    double fraction = 0.0;
};

struct AgeStatistics {
    double mean_age = 0.0;
    double median_age = 0.0;
    std::optional<std::vector<SurvivalPoint>> survival;
};

enum class SurvivalMode {
    restricted,  ///< P*(t-a) / P*(t), clamped at t0
    full,        ///< P(t-a) / P(t)
};

/// Expected reference-list length L*(t) = integral over [t0, t] of q(t-s) P'(s) ds.
///
/// Constant kernels short-cut to q * P*(t) exactly. With an exponential curve
/// and t0 = -inf the closed form of exponential_growth_prediction is used.
double expected_list_length(const CitabilityFunction& q, const GrowthCurve& P, double t,
                            const QuadratureOptions& options = {});

/// L*(t) by quadrature alone, with no constant-kernel short cut. Needs a finite t0.
double expected_list_length_quadrature(const CitabilityFunction& q, const GrowthCurve& P, double t,
                                       const QuadratureOptions& options = {});

/// L(t) = C k e^{kt} * integral over [0, inf) of q(a) e^{-ka} da, for P = C e^{kt}.
double exponential_growth_prediction(const CitabilityFunction& q, double scale, double rate, double t);

/// Expected summed age A*(t) of a reference list, by direct quadrature of
/// (t-s) q(t-s) P'(s) over [t0, t].
double expected_total_age(const CitabilityFunction& q, const GrowthCurve& P, double t,
                          const QuadratureOptions& options = {});

/// A*(t) = q * integral over [t0, t] of P*(s) ds. Only valid for constant q.
double expected_total_age_by_parts(const CitabilityFunction& q, const GrowthCurve& P, double t);

/// Uniform-model mean reference age, integral of P* over [t0, t] divided by P*(t).
double mean_reference_age(const GrowthCurve& P, double t);

/// Smallest a in [0, t - t0] with P*(t - a) <= P*(t) / 2.
double median_reference_age(const GrowthCurve& P, double t, double tolerance = 1e-9);

/// Fraction of the (uniform-model) reference list that is at least a years old.
double age_survival_fraction(const GrowthCurve& P, double t, double a,
                             SurvivalMode mode = SurvivalMode::restricted);

/// Mean, median and, when `ages` is non-empty, survival at the given ages.
AgeStatistics uniform_age_statistics(const GrowthCurve& P, double t, std::span<const double> ages = {});

}  // namespace refgrowth::model
