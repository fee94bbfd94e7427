#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "refgrowth/error.hpp"
#include "refgrowth/quadrature.hpp"

using refgrowth::integrate;

TEST_CASE("smooth integrands reach the absolute tolerance") {
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value ==
          doctest::Approx(2.0).epsilon(1e-13));
    CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0).value ==
          doctest::Approx(std::numbers::e - 1.0).epsilon(1e-13));
}

TEST_CASE("polynomials up to degree 22 are exact on one panel") {
    const auto r = integrate([](double x) { return std::pow(x, 10); }, 0.0, 2.0);
    CHECK(r.value == doctest::Approx(std::pow(2.0, 11) / 11.0).epsilon(1e-14));
    CHECK(r.subintervals == 1);
}

TEST_CASE("endpoint singularity in the derivative is resolved adaptively") {
    const auto r = integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0);
    CHECK(std::abs(r.value - 2.0 / 3.0) < 1e-9);
    CHECK(r.subintervals > 1);
}

TEST_CASE("partition points put kinks on panel boundaries") {
    const auto f = [](double x) { return std::abs(x - 0.3); };
    const std::vector<double> points{0.0, 0.3, 1.0};
    const auto r = integrate(f, points);
    CHECK(r.value == doctest::Approx(0.5 * 0.09 + 0.5 * 0.49).epsilon(1e-14));
    CHECK(r.subintervals == 2);
}

TEST_CASE("empty interval integrates to zero") {
    CHECK(integrate([](double) { return 1.0; }, 1.0, 1.0).value == 0.0);
}

TEST_CASE("budget exhaustion is a numeric error") {
    refgrowth::QuadratureOptions opts;
    opts.max_subintervals = 4;
    opts.abs_tol = 1e-15;
    opts.rel_tol = 0.0;
    CHECK_THROWS_AS(integrate([](double x) { return std::sin(1.0 / (x + 1e-3)); }, 0.0, 1.0, opts),
                    refgrowth::NumericError);
}

TEST_CASE("non-finite integrand is reported") {
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / (x - 0.5) / 0.0; }, 0.0, 1.0), refgrowth::NumericError);
}
