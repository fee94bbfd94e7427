#include "refgrowth/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "refgrowth/csv.hpp"
#include "refgrowth/error.hpp"

namespace refgrowth::inference {
namespace {

double chi_square_upper_tail(double statistic, int dof) {
    if (dof <= 0) return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, std::max(statistic, 0.0)));
}

// Pools consecutive (observed, expected) cells until each bin expects at
// least `threshold`; a short remainder joins the last bin.
struct Pooled {
    std::vector<double> observed;
    std::vector<double> expected;
};

Pooled pool_cells(std::span<const double> observed, std::span<const double> expected, double threshold) {
    Pooled out;
    double o = 0.0, e = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o += observed[i];
        e += expected[i];
        if (e >= threshold) {
            out.observed.push_back(o);
            out.expected.push_back(e);
            o = e = 0.0;
        }
    }
    if (e > 0.0 || o > 0.0) {
        if (out.observed.empty()) {
            out.observed.push_back(o);
            out.expected.push_back(e);
        } else {
            out.observed.back() += o;
            out.expected.back() += e;
        }
    }
    return out;
}

}  // namespace

LengthHistogram LengthHistogram::from_lengths(double year, std::span<const std::int64_t> lengths) {
    LengthHistogram h;
    h.year = year;
    for (auto l : lengths) {
        if (l < 0) throw DataQualityError("negative reference-list length in histogram");
        if (static_cast<std::size_t>(l) >= h.counts.size()) h.counts.resize(static_cast<std::size_t>(l) + 1, 0);
        ++h.counts[static_cast<std::size_t>(l)];
    }
    h.total = static_cast<std::int64_t>(lengths.size());
    return h;
}

LengthHistogram LengthHistogram::from_counts(double year, std::vector<std::int64_t> counts) {
    LengthHistogram h;
    h.year = year;
    for (auto c : counts) {
        if (c < 0) throw DataQualityError("negative histogram count");
        h.total += c;
    }
    h.counts = std::move(counts);
    return h;
}

double LengthHistogram::mean() const {
    if (total <= 0) throw DataQualityError("mean of an empty histogram");
    double sum = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) sum += static_cast<double>(k) * static_cast<double>(counts[k]);
    return sum / static_cast<double>(total);
}

FitResult ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataQualityError("ols: x and y differ in length");
    if (x.size() < 2) throw DataQualityError("ols: at least two points are required");

    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw NumericError("ols: x has zero variance, the slope is undefined");

    FitResult fit;
    fit.n_points = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy > 0.0) {
        fit.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
    } else {
        fit.r_squared = 0.0;
        fit.zero_variance_y = true;
    }
    if (x.size() > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - (fit.slope * x[i] + fit.intercept);
            sse += r * r;
        }
        fit.residual_variance = sse / (n - 2.0);
    }
    return fit;
}

FitResult fit_affine_q(const YearSeries& cumulative, const YearSeries& mean_lengths) {
    if (cumulative.size() != mean_lengths.size()) {
        throw DataQualityError(fmt::format("fit_affine_q: series are misaligned ({} vs {} years)", cumulative.size(),
                                           mean_lengths.size()));
    }
    if (cumulative.size() < 3) throw DataQualityError("fit_affine_q: at least three years are required");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < cumulative.size(); ++i) {
        if (cumulative[i].year != mean_lengths[i].year) {
            throw DataQualityError(fmt::format("fit_affine_q: series are misaligned at position {} ({} vs {})", i,
                                               cumulative[i].year, mean_lengths[i].year));
        }
        x.push_back(cumulative[i].value);
        y.push_back(mean_lengths[i].value);
    }
    return ols_fit(x, y);
}

YearSeries yearly_increment(const YearSeries& cumulative) {
    if (cumulative.size() < 2) throw DataQualityError("yearly_increment: at least two years are required");
    YearSeries out;
    out.reserve(cumulative.size() - 1);
    for (std::size_t i = 1; i < cumulative.size(); ++i) {
        if (cumulative[i].year != cumulative[i - 1].year + 1) {
            throw DataQualityError(fmt::format("yearly_increment: gap between {} and {}", cumulative[i - 1].year,
                                               cumulative[i].year));
        }
        out.push_back({cumulative[i].year, cumulative[i].value - cumulative[i - 1].value});
    }
    return out;
}

BinomialFit fit_binomial(const LengthHistogram& hist, std::int64_t n_trials, double min_expected) {
    if (hist.total < 1) throw DataQualityError("fit_binomial: empty histogram");
    if (n_trials < 1) throw DataQualityError("fit_binomial: n_trials must be >= 1");
    std::int64_t longest = 0;
    for (std::size_t k = 0; k < hist.counts.size(); ++k) {
        if (hist.counts[k] > 0) longest = static_cast<std::int64_t>(k);
    }
    if (longest > n_trials) {
        throw DataQualityError(fmt::format("fit_binomial: observed length {} exceeds n_trials = {}", longest, n_trials));
    }

    BinomialFit fit;
    const auto total = static_cast<double>(hist.total);
    fit.p_hat = std::clamp(hist.mean() / static_cast<double>(n_trials), 0.0, 1.0);
    fit.standard_error = std::sqrt(fit.p_hat * (1.0 - fit.p_hat) / (static_cast<double>(n_trials) * total));
    if (fit.p_hat == 0.0 || fit.p_hat == 1.0) {
        // Point mass: the fit is exact and there is nothing left to test.
        fit.bins = 1;
        return fit;
    }

    const boost::math::binomial dist(static_cast<double>(n_trials), fit.p_hat);
    std::vector<double> observed, expected;
    for (std::int64_t k = 0; k <= longest; ++k) {
        observed.push_back(static_cast<double>(hist.counts[static_cast<std::size_t>(k)]));
        expected.push_back(total * boost::math::pdf(dist, static_cast<double>(k)));
    }
    if (longest < n_trials) {
        observed.push_back(0.0);
        expected.push_back(total * boost::math::cdf(boost::math::complement(dist, static_cast<double>(longest))));
    }

    const auto pooled = pool_cells(observed, expected, min_expected);
    for (std::size_t i = 0; i < pooled.observed.size(); ++i) {
        if (pooled.expected[i] <= 0.0) continue;
        const double d = pooled.observed[i] - pooled.expected[i];
        fit.gof_statistic += d * d / pooled.expected[i];
    }
    fit.bins = static_cast<int>(pooled.observed.size());
    fit.degrees_of_freedom = std::max(0, fit.bins - 2);
    fit.p_value = chi_square_upper_tail(fit.gof_statistic, fit.degrees_of_freedom);
    return fit;
}

std::vector<double> binomial_expected_counts(std::int64_t n_trials, double p, double total, std::int64_t max_k) {
    if (n_trials < 0 || !(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_expected_counts: need n >= 0 and p in [0, 1]");
    std::vector<double> out;
    const boost::math::binomial dist(static_cast<double>(n_trials), p);
    for (std::int64_t k = 0; k <= max_k; ++k) {
        out.push_back(k <= n_trials ? total * boost::math::pdf(dist, static_cast<double>(k)) : 0.0);
    }
    return out;
}

HomogeneityTest chi_square_homogeneity(const LengthHistogram& a, const LengthHistogram& b, double min_expected) {
    if (a.total < 1 || b.total < 1) throw DataQualityError("chi_square_homogeneity: empty histogram");
    const std::size_t width = std::max(a.counts.size(), b.counts.size());
    const auto na = static_cast<double>(a.total), nb = static_cast<double>(b.total);
    const double share_a = na / (na + nb), share_b = nb / (na + nb);

    // Pool on the smaller of the two expected counts per column.
    std::vector<double> oa, ob;
    double ca = 0.0, cb = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
        ca += k < a.counts.size() ? static_cast<double>(a.counts[k]) : 0.0;
        cb += k < b.counts.size() ? static_cast<double>(b.counts[k]) : 0.0;
        if ((ca + cb) * std::min(share_a, share_b) >= min_expected) {
            oa.push_back(ca);
            ob.push_back(cb);
            ca = cb = 0.0;
        }
    }
    if (ca + cb > 0.0) {
        if (oa.empty()) {
            oa.push_back(ca);
            ob.push_back(cb);
        } else {
            oa.back() += ca;
            ob.back() += cb;
        }
    }

    HomogeneityTest test;
    for (std::size_t k = 0; k < oa.size(); ++k) {
        const double column = oa[k] + ob[k];
        const double ea = column * share_a, eb = column * share_b;
        test.statistic += (oa[k] - ea) * (oa[k] - ea) / ea + (ob[k] - eb) * (ob[k] - eb) / eb;
    }
    test.degrees_of_freedom = static_cast<int>(oa.size()) - 1;
    test.p_value = chi_square_upper_tail(test.statistic, test.degrees_of_freedom);
    return test;
}

YearSeries parse_year_series_csv(std::string_view text, std::string_view source) {
    const auto table = csv::parse(text, source);
    if (table.header.size() != 2) {
        throw DataQualityError(fmt::format("{}: expected two columns (year,value), found {}", source,
                                           table.header.size()));
    }
    YearSeries series;
    for (const auto& row : table.rows) {
        const auto year = csv::parse_double(row.fields[0]);
        const auto value = csv::parse_double(row.fields[1]);
        if (!year || !value || *year != std::floor(*year)) {
            throw DataQualityError(fmt::format("malformed CSV at {}:{}: expected an integral year and a number",
                                               source, row.line));
        }
        if (!series.empty() && static_cast<int>(*year) <= series.back().year) {
            throw DataQualityError(fmt::format("{}:{}: years must be strictly increasing", source, row.line));
        }
        series.push_back({static_cast<int>(*year), *value});
    }
    return series;
}

std::string fit_report_json(const FitResult& fit) {
    nlohmann::ordered_json j;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["n_points"] = fit.n_points;
    j["residual_variance"] = fit.residual_variance;
    j["zero_variance_y"] = fit.zero_variance_y;
    return j.dump(2) + "\n";
}

std::string fit_plot_csv(std::span<const double> x, std::span<const double> y, const FitResult& fit) {
    std::string out = "x,y,fitted\n";
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        out += fmt::format("{},{},{}\n", x[i], y[i], fit.slope * x[i] + fit.intercept);
    }
    return out;
}

}  // namespace refgrowth::inference
