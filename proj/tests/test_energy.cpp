#include "doctest.h"

#include "qcurv/energy.hpp"

#include <cmath>
#include <stdexcept>

using namespace qcurv;

namespace {
ScalarField cos1(GridSpec s) {
    return sample([](const Point4& x) { return std::cos(x[0]); }, s);
}
}  // namespace

TEST_CASE("prescribed curvature family") {
    PrescribedCurvature pc;
    CHECK(pc.f0({0, 0, 0, 0}) == 0.0);
    CHECK(pc.f0({M_PI, 0, 0, 0}) == doctest::Approx(-4.0).epsilon(1e-15));
    // near the maximum f0 = -sum alpha x^2
    double h = 1e-3;
    CHECK(pc.f0({h, 0, 0, 0}) == doctest::Approx(-h * h).epsilon(1e-6));
    pc.lambda = 0.1;
    CHECK(max_value(f_lambda_field(pc, GridSpec(8))) == doctest::Approx(0.1).epsilon(1e-15));
    PrescribedCurvature bad;
    bad.alphas = {1, 1, 1, -1};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.alphas = {2, 1, 1, 1};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("energy oracles") {
    GridSpec s(16);
    ScalarField f(s, -1.0);
    auto e0 = energy(ScalarField(s, 0.0), f, -1.0);
    CHECK(e0.quadratic == 0.0);
    CHECK(e0.linear == 0.0);
    CHECK(e0.exponential == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e0.total == doctest::Approx(1.0).epsilon(1e-15));
    for (double c : {-0.3, 0.2}) {
        auto ec = energy(ScalarField(s, c), f, -1.0);
        CHECK(ec.total == doctest::Approx(-4 * c + std::exp(4 * c)).epsilon(1e-12));
        CHECK(ec.total > e0.total);
    }
    CHECK(energy(cos1(s), f, -1.0).quadratic == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(energy(ScalarField(s, 200.0), f, -1.0), std::overflow_error);
}

TEST_CASE("gradient oracles and directional derivative") {
    GridSpec s(16);
    CHECK(max_abs(gradient_field(ScalarField(s, 0.0), ScalarField(s, -1.0), -1.0)) <= 1e-15);
    ScalarField g = gradient_field(ScalarField(s, 0.0), ScalarField(s, -2.0), -1.0);
    CHECK(max_abs(g - ScalarField(s, 4.0)) <= 1e-14);

    GridSpec s8(8);
    PrescribedCurvature pc;
    pc.lambda = 0.1;
    ScalarField f = f_lambda_field(pc, s8);
    for (unsigned long long k = 0; k < 5; ++k) {
        ScalarField u = 0.2 * random_bandlimited(s8, 2, 10 + k), v = random_bandlimited(s8, 2, 20 + k);
        double h = 1e-5;
        double fd = (energy(u + h * v, f, -1.0).total - energy(u - h * v, f, -1.0).total) / (2 * h);
        double an = inner(gradient_field(u, f, -1.0), v);
        CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
    }
}

TEST_CASE("hessian oracles") {
    GridSpec s(16);
    ScalarField u(s, 0.0), f(s, -1.0);
    ScalarField h1 = hessian_apply(u, f, {}, ScalarField(s, 1.0));
    CHECK(max_abs(h1 - ScalarField(s, 16.0)) <= 1e-13);
    CHECK(inner(h1, ScalarField(s, 1.0)) == doctest::Approx(16.0));
    ScalarField c = cos1(s);
    CHECK(inner(hessian_apply(u, f, {}, c), c) == doctest::Approx(9.0).epsilon(1e-13));
    ScalarField fneg = pointwise(random_bandlimited(s, 2, 3), [](double x) { return -std::abs(x) - 0.1; });
    for (unsigned long long k = 0; k < 5; ++k) {
        ScalarField w = random_bandlimited(s, 3, 40 + k), uu = 0.3 * random_bandlimited(s, 2, 50 + k);
        CHECK(inner(hessian_apply(uu, fneg, {}, w), w) >= 0.0);
    }
}

TEST_CASE("f-average, volume and kp residual") {
    GridSpec s(16);
    ScalarField f(s, -1.0);
    CHECK(f_average(ScalarField(s, 0.37), f).ubar == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(std::abs(f_average(cos1(s), f).ubar) <= 1e-15);
    PrescribedCurvature pc;
    ScalarField f0 = f_lambda_field(pc, GridSpec(8));
    for (unsigned long long k = 0; k < 5; ++k)
        CHECK(f_average(0.5 * random_bandlimited(GridSpec(8), 3, k), f0).jensen_gap >= 0.0);
    CHECK_THROWS_AS(f_average(ScalarField(s, 0.0), ScalarField(s, 1.0)), std::invalid_argument);
    CHECK(volume(ScalarField(s, 0.0)) == 1.0);
    CHECK(kp_residual(ScalarField(s, 0.0), f, -1.0) == 0.0);
}
