#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace refgrowth::inference {

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;
    double residual_variance = 0.0;  ///< SSE / (n - 2); 0 when n = 2
    bool zero_variance_y = false;    ///< R^2 was set to 0 by convention
};

struct YearValue {
    int year = 0;
    double value = 0.0;
};
using YearSeries = std::vector<YearValue>;

/// Reference-list length counts for one publication year (or cohort time).
struct LengthHistogram {
    double year = 0.0;
    std::vector<std::int64_t> counts;  ///< counts[k] = articles with k references
    std::int64_t total = 0;

    static LengthHistogram from_lengths(double year, std::span<const std::int64_t> lengths);
    static LengthHistogram from_counts(double year, std::vector<std::int64_t> counts);
    double mean() const;
};

struct BinomialFit {
    double p_hat = 0.0;
    double standard_error = 0.0;  ///< sqrt(p(1-p) / (n_trials * total))
    double gof_statistic = 0.0;   ///< Pearson chi-square over pooled bins
    double p_value = 1.0;         ///< 1 when there are no degrees of freedom left
    int degrees_of_freedom = 0;
    int bins = 0;
};

struct HomogeneityTest {
    double statistic = 0.0;
    int degrees_of_freedom = 0;
    double p_value = 1.0;
};

/// Unweighted least squares line y = slope x + intercept.
FitResult ols_fit(std::span<const double> x, std::span<const double> y);

/// OLS of yearly mean list length on cumulative production. The slope
/// estimates the uniform-model citation probability q; the intercept
/// absorbs -q P(t0) and the references to pre-t0 articles.
FitResult fit_affine_q(const YearSeries& cumulative, const YearSeries& mean_lengths);

/// First differences P(t) - P(t-1), labelled with the later year.
YearSeries yearly_increment(const YearSeries& cumulative);

/// Method-of-moments (= maximum likelihood for known n) binomial fit with a
/// Pearson goodness-of-fit test. Adjacent lengths are pooled until every bin
/// expects at least `min_expected` articles; the upper tail beyond the largest
/// observed length is folded into the last bin.
BinomialFit fit_binomial(const LengthHistogram& hist, std::int64_t n_trials, double min_expected = 5.0);

/// total * Bin(k; n_trials, p) for k = 0..max_k.
std::vector<double> binomial_expected_counts(std::int64_t n_trials, double p, double total, std::int64_t max_k);

/// Pearson chi-square test that two histograms come from the same distribution.
HomogeneityTest chi_square_homogeneity(const LengthHistogram& a, const LengthHistogram& b,
                                       double min_expected = 5.0);

/// Two columns year,<value> with a header. Years must be integral.
YearSeries parse_year_series_csv(std::string_view text, std::string_view source = "<series>");

/// JSON object with slope, intercept, r_squared, n_points, residual_variance.
std::string fit_report_json(const FitResult& fit);

/// Plot-ready CSV: x,y,fitted.
std::string fit_plot_csv(std::span<const double> x, std::span<const double> y, const FitResult& fit);

}  // namespace refgrowth::inference
