#include "doctest.h"

#include "qcurv/grid.hpp"
#include "qcurv/radial.hpp"
#include "qcurv/snapshot.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

using namespace qcurv;

namespace {
ScalarField cos_mode(GridSpec s, int k, int axis = 0) {
    return sample([&](const Point4& x) { return std::cos(k * x[axis]); }, s);
}
double max_diff(const ScalarField& a, const ScalarField& b) { return max_abs(a - b); }
}  // namespace

TEST_CASE("grid construction rejects odd or tiny sizes") {
    CHECK_THROWS_AS(GridSpec(7), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec(6), std::invalid_argument);
    CHECK_NOTHROW(GridSpec(8));
    GridSpec s(8);
    CHECK(s.size() == 4096);
    CHECK(s.flatten(s.unflatten(1234)) == 1234);
}

TEST_CASE("sample oracles") {
    ScalarField one = sample([](const Point4&) { return 1.0; }, GridSpec(8));
    CHECK(mean(one) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(mean(cos_mode(GridSpec(16), 1))) <= 1e-14);
    ScalarField s2 = sample([](const Point4& x) { return std::pow(std::sin(x[0] / 2), 2); }, GridSpec(16));
    CHECK(mean(s2) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(sample([](const Point4&) { return NAN; }, GridSpec(8)), std::domain_error);
}

TEST_CASE("Fourier multipliers on eigenfunctions") {
    GridSpec s(16);
    ScalarField c1 = cos_mode(s, 1);
    CHECK(max_diff(laplacian(c1), -1.0 * c1) <= 1e-12);
    CHECK(max_diff(bilaplacian(c1), c1) <= 1e-12);
    CHECK(max_abs(laplacian(ScalarField(s, 3.0))) <= 1e-12);
    ScalarField c3 = cos_mode(s, 3, 2);
    CHECK(max_diff(bilaplacian(c3), 81.0 * c3) <= 1e-10);
    ScalarField d = partial(sample([](const Point4& x) { return std::sin(2 * x[1]); }, s), 1);
    ScalarField ref = sample([](const Point4& x) { return 2 * std::cos(2 * x[1]); }, s);
    CHECK(max_diff(d, ref) <= 1e-12);
}

TEST_CASE("mean-zero bilaplacian solve") {
    GridSpec s(16);
    CHECK(max_diff(solve_bilaplacian_meanzero(cos_mode(s, 1)), cos_mode(s, 1)) <= 1e-13);
    CHECK(max_diff(solve_bilaplacian_meanzero(cos_mode(s, 2)), (1.0 / 16) * cos_mode(s, 2)) <= 1e-13);
    CHECK_THROWS_AS(solve_bilaplacian_meanzero(ScalarField(s, 1.0)), std::invalid_argument);
    ScalarField r = random_bandlimited(s, 4, 5, true);
    CHECK(max_diff(bilaplacian(solve_bilaplacian_meanzero(r)), r) <= 1e-11);
}

TEST_CASE("Parseval and adjointness on random band-limited pairs") {
    GridSpec s(8);
    for (unsigned long long k = 0; k < 10; ++k) {
        ScalarField u = random_bandlimited(s, 3, 2 * k + 1), v = random_bandlimited(s, 3, 2 * k + 2);
        double a = inner(u, v), b = spectral_inner(u, v);
        CHECK(std::abs(a - b) <= 1e-10 * (1 + std::abs(a)));
        double lhs = inner(bilaplacian(u), v), rhs = inner(u, bilaplacian(v));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * (1 + std::abs(lhs)));
        for (int ax = 0; ax < 4; ++ax) {
            double skew = inner(partial(u, ax), v) + inner(u, partial(v, ax));
            CHECK(std::abs(skew) <= 1e-10);
        }
    }
}

TEST_CASE("random fields are deterministic in the seed") {
    GridSpec s(8);
    CHECK(random_bandlimited(s, 2, 9).values == random_bandlimited(s, 2, 9).values);
    CHECK(random_bandlimited(s, 2, 9).values != random_bandlimited(s, 2, 10).values);
    CHECK(std::abs(mean(random_bandlimited(s, 2, 9, true))) <= 1e-14);
}

TEST_CASE("interpolation reproduces band-limited fields off the grid") {
    GridSpec s(16);
    auto fn = [](const Point4& x) { return std::cos(x[0] + 2 * x[1]) + 0.3 * std::sin(3 * x[3] - x[2]); };
    ScalarField u = sample(fn, s);
    Point4 p{0.123, 1.7, 4.4, 5.9};
    CHECK(interpolate(u, p) == doctest::Approx(fn(p)).epsilon(1e-12));
}

TEST_CASE("spherical means from the shell spectrum") {
    GridSpec s(16);
    // the spherical mean of cos(x1) over |y| = r in R^4 is 2 J1(r)/r
    ShellSpectrum sh = shell_spectrum(cos_mode(s, 1), Point4{0, 0, 0, 0});
    double r = 0.7;
    CHECK(sh.spherical_mean(r) == doctest::Approx(2 * std::cyl_bessel_j(1.0, r) / r).epsilon(1e-12));
    CHECK(sh.spherical_mean(0.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("radial quadrature oracles") {
    double lam = 1e-4;
    double v = radial_quadrature([](double r) { return std::pow(r, -4); }, RadialGrid::logarithmic(lam, std::sqrt(lam), 8));
    CHECK(v == doctest::Approx(kPi * kPi * std::log(1e4)).epsilon(1e-12));
    double ball = radial_quadrature([](double) { return 1.0; }, RadialGrid::uniform(0, 1, 1));
    CHECK(ball == doctest::Approx(kPi * kPi / 2).epsilon(1e-14));
    CHECK_THROWS_AS(radial_quadrature([](double) { return INFINITY; }, RadialGrid::uniform(0, 1, 1)),
                    std::domain_error);
    CHECK_THROWS_AS(LineRule::logarithmic(0, 1, 4), std::invalid_argument);
}

TEST_CASE("snapshot round trip") {
    GridSpec s(8);
    ScalarField u = random_bandlimited(s, 3, 4);
    auto path = (std::filesystem::temp_directory_path() / "qcurv_test_snapshot.qc4f").string();
    write_snapshot(path, u, 0.125);
    Snapshot back = read_snapshot(path);
    CHECK(back.lambda == 0.125);
    CHECK(back.field.spec.n == 8);
    CHECK(back.field.values == u.values);
    std::filesystem::remove(path);
    CHECK_THROWS(read_snapshot(path));
}
