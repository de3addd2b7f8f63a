#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gevreylab/errors.hpp"
#include "gevreylab/quadrature.hpp"

using namespace gevreylab;

TEST_CASE("polynomial exactness") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(integrate([](double x) { return std::pow(x, 7); }, -1.0, 2.0) ==
          doctest::Approx((256.0 - 1.0) / 8.0).epsilon(1e-14));
}

TEST_CASE("oscillatory and peaked integrands") {
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, 20.0) ==
          doctest::Approx(1.0 - std::cos(20.0)).epsilon(1e-12));
    // sharp Gaussian needs adaptivity
    CHECK(integrate([](double x) { return std::exp(-1000.0 * x * x); }, -1.0,
                    1.0) ==
          doctest::Approx(std::sqrt(M_PI / 1000.0)).epsilon(1e-12));
}

TEST_CASE("endpoint singularity r^{-1/2}") {
    CHECK(integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0) ==
          doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("infinite tail") {
    CHECK(integrate_to_inf([](double x) { return std::exp(-x); }, 1.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(integrate_to_inf([](double x) { return 1.0 / (x * x); }, 2.0) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("non-finite integrand is rejected") {
    CHECK_THROWS_AS(
        integrate([](double x) { return 1.0 / x; }, -1.0, 1.0),
        DivergentIntegral);
}

TEST_CASE("power law fit recovers exponent") {
    auto fit = fit_power_law([](double t) { return 3.0 * std::pow(t, -1.7); },
                             10.0, 1000.0);
    CHECK(fit.alpha == doctest::Approx(-1.7).epsilon(1e-10));
    CHECK(std::exp(fit.log_c) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fit.residual < 1e-10);
    CHECK(fit.eval(50.0) == doctest::Approx(3.0 * std::pow(50.0, -1.7)));
}
