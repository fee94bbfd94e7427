#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "refgrowth/error.hpp"
#include "refgrowth/model.hpp"

using refgrowth::CitabilityFunction;
using refgrowth::GrowthCurve;
namespace model = refgrowth::model;

namespace {

const double kNegInf = -std::numeric_limits<double>::infinity();

double relative_error(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace

TEST_SUITE("expected_list_length") {
    TEST_CASE("zero kernel gives empty lists") {
        const auto q = CitabilityFunction::constant(0.0);
        CHECK(model::expected_list_length(q, GrowthCurve::linear(0, 100), 7.0) == 0.0);
        CHECK(model::expected_list_length(q, GrowthCurve::polynomial(0, {0, 1, 2}), 3.0) == 0.0);
        CHECK(model::expected_list_length(q, GrowthCurve::exponential(1, 0.1), 3.0) == 0.0);
    }

    TEST_CASE("constant kernel on linear growth is q r (t - t0)") {
        const auto q = CitabilityFunction::constant(0.002);
        const auto P = GrowthCurve::linear(2006.0, 200.0, 5000.0);
        CHECK(model::expected_list_length(q, P, 2016.0) == doctest::Approx(0.002 * 200.0 * 10.0));
        // Same answer through quadrature.
        CHECK(model::expected_list_length_quadrature(q, P, 2016.0) == doctest::Approx(4.0).epsilon(1e-13));
    }

    TEST_CASE("exponential decay kernel on exponential growth, infinite history") {
        const double C = 2.5, k = 0.07, lambda = 0.3, t = 12.0;
        const auto q = CitabilityFunction::exponential_decay(1.0, lambda);
        const auto P = GrowthCurve::exponential(C, k);
        // integral_0^inf e^{-lambda a} e^{-k a} da = 1 / (k + lambda)
        const double want = C * k * std::exp(k * t) / (k + lambda);
        CHECK(relative_error(model::expected_list_length(q, P, t), want) < 1e-14);
    }

    TEST_CASE("exponential decay kernel on linear growth, finite origin") {
        const double r = 300.0, lambda = 0.25, q0 = 0.01, w = 8.0;
        const auto q = CitabilityFunction::exponential_decay(q0, lambda);
        const auto P = GrowthCurve::linear(0.0, r);
        // integral_0^w q0 e^{-lambda a} r da
        const double want = q0 * r * (1.0 - std::exp(-lambda * w)) / lambda;
        CHECK(relative_error(model::expected_list_length(q, P, w), want) < 1e-12);
    }

    TEST_CASE("tabulated kernel with a cut-off inside the window") {
        const auto q = CitabilityFunction::tabulated({0, 2, 5}, {0.01, 0.01, 0.004});
        const auto P = GrowthCurve::polynomial(0.0, {0, 10, 3});
        const double t = 9.0;
        const auto integrand = [&](double s) { return q(t - s) * P.rate(s); };
        // Kernel knots at s = 9, 7, 4; zero for s < 4.
        const double want = oracle::simpson(integrand, 4.0, 7.0) + oracle::simpson(integrand, 7.0, 9.0);
        CHECK(relative_error(model::expected_list_length(q, P, t), want) < 1e-10);
    }

    TEST_CASE("domain errors") {
        const auto q = CitabilityFunction::exponential_decay(0.1, 0.1);
        const auto P = GrowthCurve::linear(10.0, 5.0);
        CHECK_THROWS_AS(model::expected_list_length(q, P, 9.0), refgrowth::DomainError);
        CHECK(model::expected_list_length(q, P, 10.0) == 0.0);
        CHECK_THROWS_AS(model::expected_list_length_quadrature(q, GrowthCurve::exponential(1, 1), 1.0),
                        refgrowth::DomainError);
    }

    TEST_CASE("quadrature budget exhaustion surfaces as a numeric error") {
        refgrowth::QuadratureOptions opts;
        opts.abs_tol = 0.0;
        opts.rel_tol = 0.0;
        opts.max_subintervals = 3;
        const auto q = CitabilityFunction::exponential_decay(0.5, 3.0);
        const auto P = GrowthCurve::exponential(1.0, 2.0, 0.0);
        CHECK_THROWS_AS(model::expected_list_length(q, P, 10.0, opts), refgrowth::NumericError);
    }

    TEST_CASE("property: uniform shortcut equals quadrature on every variant") {
        std::mt19937_64 rng(1234);
        std::uniform_real_distribution<double> uq(0.0, 1.0);
        for (int i = 0; i < 40; ++i) {
            const auto P = oracle::random_curve(rng, i, 1990.0, 20);
            const auto q = CitabilityFunction::constant(uq(rng));
            const double t = 1990.0 + 20.0 * uq(rng);
            const double shortcut = model::expected_list_length(q, P, t);
            const double quad = model::expected_list_length_quadrature(q, P, t);
            CHECK(std::abs(shortcut - quad) <= 1e-9 + 1e-12 * std::abs(shortcut));
        }
    }

    TEST_CASE("property: kernel dominance orders the predicted lengths") {
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 20; ++i) {
            const auto P = oracle::random_curve(rng, i, 0.0, 15);
            const double q0 = 0.5 * u(rng);
            const auto weak = CitabilityFunction::exponential_decay(q0, 0.05 + u(rng));
            const auto strong = CitabilityFunction::constant(q0);
            const auto tab = CitabilityFunction::tabulated({0, 5, 10}, {q0, 0.5 * q0, 0.1 * q0});
            const double t = 15.0;
            const double l_weak = model::expected_list_length(weak, P, t);
            const double l_tab = model::expected_list_length(tab, P, t);
            const double l_strong = model::expected_list_length(strong, P, t);
            CHECK(l_weak <= l_strong + 1e-9);
            CHECK(l_tab <= l_strong + 1e-9);
        }
    }
}

TEST_SUITE("exponential_growth_prediction") {
    TEST_CASE("hand integrals") {
        const double C = 4.0, k = 0.05, t = 30.0;
        CHECK(relative_error(model::exponential_growth_prediction(CitabilityFunction::constant(0.01), C, k, t),
                             C * 0.01 * std::exp(k * t)) < 1e-14);
        CHECK(relative_error(
                  model::exponential_growth_prediction(CitabilityFunction::exponential_decay(1.0, 0.2), C, k, t),
                  C * k * std::exp(k * t) / (k + 0.2)) < 1e-14);
        CHECK(model::exponential_growth_prediction(CitabilityFunction::constant(0.0), C, k, t) == 0.0);
    }

    TEST_CASE("k <= 0 is rejected") {
        CHECK_THROWS_AS(model::exponential_growth_prediction(CitabilityFunction::constant(0.1), 1.0, 0.0, 1.0),
                        refgrowth::DomainError);
        CHECK_THROWS_AS(model::exponential_growth_prediction(CitabilityFunction::constant(0.1), 1.0, -0.1, 1.0),
                        refgrowth::DomainError);
    }

    TEST_CASE("property: L(t2)/L(t1) = e^{k (t2 - t1)}") {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const auto tab = CitabilityFunction::tabulated({0, 3, 9}, {0.02, 0.01, 0.005});
        for (int i = 0; i < 20; ++i) {
            const double k = 0.01 + 0.3 * u(rng), C = 1.0 + 10 * u(rng);
            const double t1 = 20 * u(rng), t2 = 20 * u(rng);
            for (const auto& q : {CitabilityFunction::constant(0.3), CitabilityFunction::exponential_decay(0.4, 0.1), tab}) {
                const double ratio = model::exponential_growth_prediction(q, C, k, t2) /
                                     model::exponential_growth_prediction(q, C, k, t1);
                CHECK(relative_error(ratio, std::exp(k * (t2 - t1))) < 1e-12);
            }
        }
    }

    TEST_CASE("finite-history quadrature approaches the infinite-history value") {
        const double C = 1.0, k = 0.5, t = 40.0;
        const auto q = CitabilityFunction::exponential_decay(0.3, 0.1);
        const auto far_origin = GrowthCurve::exponential(C, k, t - 80.0);
        const double finite = model::expected_list_length(q, far_origin, t);
        const double infinite = model::exponential_growth_prediction(q, C, k, t);
        CHECK(relative_error(finite, infinite) < 1e-9);
    }
}

TEST_SUITE("expected_total_age") {
    TEST_CASE("constant kernel, linear growth: q r w^2 / 2") {
        const auto q = CitabilityFunction::constant(0.01);
        const auto P = GrowthCurve::linear(5.0, 80.0, 17.0);
        const double w = 6.0;
        CHECK(model::expected_total_age(q, P, 5.0 + w) == doctest::Approx(0.01 * 80.0 * w * w / 2).epsilon(1e-12));
        CHECK(model::expected_total_age_by_parts(q, P, 5.0 + w) ==
              doctest::Approx(0.01 * 80.0 * w * w / 2).epsilon(1e-14));
    }

    TEST_CASE("constant kernel, quadratic growth: q w^3 / 3") {
        const auto q = CitabilityFunction::constant(0.2);
        const auto P = GrowthCurve::polynomial(0.0, {0, 0, 1});
        CHECK(model::expected_total_age(q, P, 9.0) == doctest::Approx(0.2 * 729.0 / 3.0).epsilon(1e-12));
        CHECK(model::expected_total_age_by_parts(q, P, 9.0) == doctest::Approx(0.2 * 243.0).epsilon(1e-14));
    }

    TEST_CASE("zero kernel") {
        CHECK(model::expected_total_age(CitabilityFunction::constant(0.0), GrowthCurve::linear(0, 10), 4.0) == 0.0);
    }

    TEST_CASE("by-parts form needs a constant kernel") {
        CHECK_THROWS_AS(model::expected_total_age_by_parts(CitabilityFunction::exponential_decay(0.1, 0.1),
                                                           GrowthCurve::linear(0, 1), 2.0),
                        refgrowth::DomainError);
    }

    TEST_CASE("infinite history uses the kernel's first moment") {
        const auto q = CitabilityFunction::constant(0.1);
        const auto P = GrowthCurve::exponential(2.0, 0.25);
        const double t = 3.0;
        CHECK(model::expected_total_age(q, P, t) ==
              doctest::Approx(model::expected_total_age_by_parts(q, P, t)).epsilon(1e-14));
    }

    TEST_CASE("property: direct quadrature equals q times integrated P* on random polynomials") {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 30; ++i) {
            const auto P = oracle::random_polynomial(rng, 100.0);
            const auto q = CitabilityFunction::constant(u(rng));
            const double t = 100.0 + 15.0 * u(rng);
            const double direct = model::expected_total_age(q, P, t);
            const double parts = model::expected_total_age_by_parts(q, P, t);
            CHECK(std::abs(direct - parts) <= 1e-9 + 1e-12 * std::abs(parts));
        }
    }
}

TEST_SUITE("mean_reference_age") {
    TEST_CASE("quadratic growth gives a third of the window") {
        const auto P = GrowthCurve::polynomial(2006.0, {123.0, 0.0, 42.0});
        CHECK(model::mean_reference_age(P, 2016.0) == doctest::Approx(10.0 / 3.0).epsilon(1e-14));
    }

    TEST_CASE("linear growth gives half of the window") {
        CHECK(model::mean_reference_age(GrowthCurve::linear(0.0, 7.0, 3.0), 8.0) == doctest::Approx(4.0));
    }

    TEST_CASE("exponential growth with infinite history gives 1/k") {
        CHECK(model::mean_reference_age(GrowthCurve::exponential(5.0, 0.04), 2000.0) ==
              doctest::Approx(25.0).epsilon(1e-14));
    }

    TEST_CASE("no citable articles") {
        CHECK_THROWS_AS(model::mean_reference_age(GrowthCurve::linear(0.0, 7.0), 0.0), refgrowth::DomainError);
        CHECK_THROWS_AS(model::mean_reference_age(GrowthCurve::tabulated({0, 1, 2}, {5, 5, 9}), 1.0),
                        refgrowth::DomainError);
    }

    TEST_CASE("property: mean is the window times the area fraction under P*") {
        std::mt19937_64 rng(8);
        for (int i = 0; i < 40; ++i) {
            const auto P = oracle::random_curve(rng, i, 0.0, 10);
            const double t = 10.0;
            const double area = oracle::simpson([&](double s) { return P.restricted(s); }, 0.0, t);
            const double fraction = area / (t * P.restricted(t));
            const double mean = model::mean_reference_age(P, t);
            CHECK(mean == doctest::Approx(t * fraction).epsilon(1e-9));
            CHECK(mean >= 0.0);
            CHECK(mean <= t);
        }
    }
}

TEST_SUITE("median_reference_age") {
    TEST_CASE("linear growth: half the window") {
        CHECK(model::median_reference_age(GrowthCurve::linear(3.0, 11.0), 13.0) == 5.0);
    }

    TEST_CASE("quadratic growth: (1 - 2^{-1/2}) of the window, confirmed by bisection") {
        const auto P = GrowthCurve::polynomial(0.0, {0, 0, 5});
        const double w = 10.0;
        const double got = model::median_reference_age(P, w);
        const double by_hand = (1.0 - 1.0 / std::sqrt(2.0)) * w;
        const double by_bisection =
            oracle::bisect([&](double a) { return 5.0 * (w - a) * (w - a) <= 0.5 * 5.0 * w * w; }, 0.0, w);
        CHECK(std::abs(got - by_hand) < 1e-12);
        CHECK(std::abs(got - by_bisection) < 1e-9);
        CHECK(got / w == doctest::Approx(0.2929).epsilon(1e-4));
    }

    TEST_CASE("cubic growth: (1 - 2^{-1/3}) of the window") {
        const auto P = GrowthCurve::polynomial(0.0, {0, 0, 0, 2});
        CHECK(model::median_reference_age(P, 6.0) == doctest::Approx((1.0 - std::cbrt(0.5)) * 6.0).epsilon(1e-14));
        CHECK(model::median_reference_age(P, 6.0) / 6.0 == doctest::Approx(0.2063).epsilon(1e-4));
    }

    TEST_CASE("mixed polynomial goes through bisection") {
        const auto P = GrowthCurve::polynomial(0.0, {0, 3, 1});
        const double t = 5.0;
        const double half = 0.5 * P.restricted(t);
        const double expected = oracle::bisect([&](double a) { return P.restricted(t - a) <= half; }, 0.0, t);
        CHECK(std::abs(model::median_reference_age(P, t) - expected) < 2e-9);
    }

    TEST_CASE("exponential growth closed forms") {
        const auto inf = GrowthCurve::exponential(1.0, 0.1);
        CHECK(model::median_reference_age(inf, 50.0) == doctest::Approx(std::log(2.0) / 0.1));
        const auto fin = GrowthCurve::exponential(1.0, 0.1, 40.0);
        const double m = model::median_reference_age(fin, 50.0);
        CHECK(fin.restricted(50.0 - m) == doctest::Approx(0.5 * fin.restricted(50.0)).epsilon(1e-12));
    }

    TEST_CASE("plateau returns the smallest root") {
        // P* flat at exactly half of its final value on [1, 2].
        const auto P = GrowthCurve::tabulated({0, 1, 2, 3}, {0, 50, 50, 100});
        CHECK(model::median_reference_age(P, 3.0) == doctest::Approx(1.0).epsilon(1e-9));
    }

    TEST_CASE("no citable articles") {
        CHECK_THROWS_AS(model::median_reference_age(GrowthCurve::linear(0.0, 1.0), 0.0), refgrowth::DomainError);
    }

    TEST_CASE("property: survival at the median is one half") {
        std::mt19937_64 rng(77);
        for (int i = 0; i < 40; ++i) {
            const auto P = oracle::random_curve(rng, i, 1950.0, 30);
            const double t = 1980.0;
            const double m = model::median_reference_age(P, t);
            CHECK(m >= 0.0);
            CHECK(m <= t - 1950.0);
            CHECK(std::abs(model::age_survival_fraction(P, t, m) - 0.5) < 1e-6);
        }
    }
}

TEST_SUITE("age_survival_fraction") {
    TEST_CASE("edges") {
        const auto P = GrowthCurve::polynomial(2000.0, {10, 1, 1});
        CHECK(model::age_survival_fraction(P, 2010.0, 0.0) == 1.0);
        CHECK(model::age_survival_fraction(P, 2010.0, 10.0) == 0.0);
        CHECK(model::age_survival_fraction(P, 2010.0, 25.0) == 0.0);
        CHECK_THROWS_AS(model::age_survival_fraction(P, 2010.0, -1.0), refgrowth::DomainError);
    }

    TEST_CASE("exponential growth: e^{-ka}") {
        const auto P = GrowthCurve::exponential(3.0, 0.2);
        CHECK(model::age_survival_fraction(P, 10.0, 4.0) == doctest::Approx(std::exp(-0.8)).epsilon(1e-14));
        CHECK(model::age_survival_fraction(P, 10.0, 4.0, model::SurvivalMode::full) ==
              doctest::Approx(std::exp(-0.8)).epsilon(1e-14));
    }

    TEST_CASE("full mode uses P itself and needs t - a in range") {
        const auto P = GrowthCurve::linear(0.0, 10.0, 100.0);
        CHECK(model::age_survival_fraction(P, 5.0, 2.0, model::SurvivalMode::full) == doctest::Approx(130.0 / 150.0));
        CHECK_THROWS_AS(model::age_survival_fraction(P, 5.0, 6.0, model::SurvivalMode::full), refgrowth::DomainError);
    }

    TEST_CASE("property: survival is nonincreasing in age") {
        std::mt19937_64 rng(31);
        for (int i = 0; i < 40; ++i) {
            const auto P = oracle::random_curve(rng, i, 0.0, 20);
            double prev = 1.0;
            for (double a = 0.0; a <= 21.0; a += 0.37) {
                const double s = model::age_survival_fraction(P, 20.0, a);
                CHECK(s <= prev);
                CHECK(s >= 0.0);
                prev = s;
            }
        }
    }
}

TEST_CASE("uniform_age_statistics bundles mean, median and survival") {
    const auto P = GrowthCurve::polynomial(0.0, {0, 0, 1});
    const std::vector<double> ages{0, 1, 5};
    const auto stats = model::uniform_age_statistics(P, 12.0, ages);
    CHECK(stats.mean_age == doctest::Approx(4.0));
    REQUIRE(stats.survival.has_value());
    CHECK(stats.survival->at(0).fraction == 1.0);
    CHECK(stats.survival->at(2).fraction == doctest::Approx(49.0 / 144.0));
}
