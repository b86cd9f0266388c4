#include "doctest.h"

#include "qcurv/comparison.hpp"
#include "qcurv/minimizer.hpp"

#include <cmath>
#include <stdexcept>

using namespace qcurv;

TEST_CASE("cutoff parameters") {
    auto p = CutoffParams::make(1.1);
    CHECK(p.blend == doctest::Approx(1.0 / 6).epsilon(1e-15));
    CHECK(p.xi_second_sup == doctest::Approx(12.375).epsilon(1e-14));
    CHECK(xi(2.0, p) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(CutoffParams::make(1.0), std::invalid_argument);
    CHECK_THROWS_AS(CutoffParams::make(2.0), std::invalid_argument);
}

TEST_CASE("xi_delta oracles and derivative bounds") {
    auto p = CutoffParams::make(1.1);
    double d = 3.7;
    CHECK(xi_delta(0.5 * d, d, p) == 0.5 * d);
    CHECK(xi_delta(d, d, p) == doctest::Approx(d).epsilon(1e-15));
    CHECK(xi_delta(2 * d, d, p) == doctest::Approx(2 * d).epsilon(1e-14));
    CHECK(xi_delta(5 * d, d, p) == doctest::Approx(2 * d).epsilon(1e-15));
    double max1 = 0, max2 = 0;
    for (int i = 0; i <= 4000; ++i) {
        double t = 2.5 * d * i / 4000;
        max1 = std::max(max1, std::abs(xi_delta_prime(t, d, p)));
        max2 = std::max(max2, std::abs(xi_delta_second(t, d, p)));
        // derivatives against central differences
        double h = 1e-5;
        if (t > h) {
            double fd = (xi_delta(t + h, d, p) - xi_delta(t - h, d, p)) / (2 * h);
            CHECK(std::abs(fd - xi_delta_prime(t, d, p)) <= 1e-7);
        }
    }
    CHECK(max1 <= 1.1 + 1e-14);
    CHECK(max2 <= p.xi_second_sup / d * (1 + 1e-12));
    CHECK(max2 >= 0.99 * p.xi_second_sup / d);
}

TEST_CASE("radial cutoff tau") {
    CHECK(tau(0.3) == 1.0);
    CHECK(tau(0.75) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tau(1.2) == 0.0);
    CHECK(tau_prime(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(tau_second(1.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("z and w profiles") {
    auto p = CutoffParams::make(1.1);
    double lam = 1e-3;
    CHECK(z_lambda({lam / 2, 0, 0, 0}, lam, p) == doctest::Approx(std::log(1 / lam)).epsilon(1e-15));
    CHECK(z_lambda({1.5, 0, 0, 0}, lam, p) == 0.0);
    double L = 0.7;
    CHECK(w_lambda({0, 0, 0, 0}, lam, L, p) == doctest::Approx(std::log(1 / lam)).epsilon(1e-15));
    for (int i = 0; i <= 200; ++i) {
        double r = 1.2 * std::sqrt(lam) / L * i / 200;
        CHECK(w_lambda({r, 0, 0, 0}, lam, L, p) >= 0.0);
    }
}

TEST_CASE("z Laplacian against differenced radial derivatives") {
    auto p = CutoffParams::make(1.1);
    double lam = 1e-4;
    for (double r : {5e-4, 3e-3, 0.02, 0.6, 0.8, 0.95}) {
        double h = 1e-6 * r;
        double d2 = (z_radial_prime(r + h, lam, p) - z_radial_prime(r - h, lam, p)) / (2 * h);
        double lap = d2 + 3 * z_radial_prime(r, lam, p) / r;
        CHECK(z_laplacian(r, lam, p) == doctest::Approx(lap).epsilon(1e-6));
    }
    // the printed outer coefficient differs where log(1/r) is nonzero
    CHECK(std::abs(z_laplacian_printed(0.8) - z_laplacian(0.8, lam, p)) > 1e-3);
}

TEST_CASE("choose_L") {
    PrescribedCurvature pc;
    CHECK(choose_L(pc, 1e-2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    pc.alphas = {0.1, 0.1, 0.2, 0.2};
    CHECK(choose_L(pc, 1e-2) == doctest::Approx(std::sqrt(0.4)).epsilon(1e-15));
    // L must also exceed sqrt(lambda0)
    CHECK(choose_L(pc, 0.5) > std::sqrt(0.5));
    // f0 >= -lambda/2 on the support ball, sampled
    double lam = 0.01, L = choose_L(pc, 0.28), R = std::sqrt(lam) / L;
    for (int i = 0; i <= 50; ++i)
        for (int ax = 0; ax < 4; ++ax) {
            Point4 x{0, 0, 0, 0};
            x[ax] = R * i / 50;
            CHECK(pc.f0(x) >= -lam / 2);
        }
    PrescribedCurvature flat0;
    flat0.alphas = {0, 0, 0, 0};
    CHECK_THROWS_AS(choose_L(flat0, 1e-2), std::invalid_argument);
}

TEST_CASE("quadrature pieces against closed forms and frozen values") {
    auto p = CutoffParams::make(1.1);
    for (double lam : {1e-2, 1e-4, std::exp(-10.0)}) {
        auto a = appendix_integrals(lam, p, 5);
        CHECK(std::abs(a.II - a.II_closed) <= 1e-8 * a.II_closed);
        CHECK(a.quadrature_error <= 1e-12);
        CHECK(a.M1 <= a.M1_bound);
        CHECK(a.I == doctest::Approx(appendix_I_sigma(lam, p)).epsilon(1e-10));
        CHECK(a.I <= a.I_bound);
    }
    auto e10 = appendix_integrals(std::exp(-10.0), p, 5);
    CHECK(e10.II == doctest::Approx(40 * M_PI * M_PI - 8 * M_PI * M_PI * std::log(2.0)).epsilon(1e-12));
    auto a2 = appendix_integrals(1e-2, p, 5);
    CHECK(a2.III == doctest::Approx(223.291843975).epsilon(1e-10));
    CHECK(a2.M1 == doctest::Approx(673.961115509).epsilon(1e-10));
    CHECK(appendix_integrals(1e-8, p, 5).III == doctest::Approx(a2.III).epsilon(1e-10));
    CHECK_THROWS_AS(appendix_integrals(0.3, p, 5), std::invalid_argument);
    CHECK_THROWS_AS(appendix_integrals(1e-2, p, 4), std::invalid_argument);
}

TEST_CASE("log-log slope") {
    std::vector<double> l{1e-2, 1e-3, 1e-4}, v;
    for (double x : l) v.push_back(3 * x * x);
    CHECK(loglog_slope(l, v) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("ray energy at lambda = 1e-3") {
    GridSpec s(16);
    PrescribedCurvature pc;
    pc.alphas = {0.2, 0.2, 0.2, 0.2};
    auto u0 = solve_unique_min(f_lambda_field(pc, s), -1.0, {}, {}).u;
    auto p = CutoffParams::make(1.1);
    double L = choose_L(pc, 0.28);
    pc.lambda = 1e-3;
    auto rep = ray_energy_radial(u0, pc, -1.0, L, p);
    CHECK(rep.mode == "radial");
    CHECK(rep.energy_at_zero == doctest::Approx(energy(u0, f_lambda_field(pc, s), -1.0).total).epsilon(1e-10));
    CHECK(rep.energies.front() == doctest::Approx(rep.energy_at_zero).epsilon(1e-12));
    CHECK(rep.paneitz_form_geometric == doctest::Approx(appendix_integrals(1e-3, p, 5).M1).epsilon(1e-10));
    CHECK(rep.s_star == doctest::Approx(1.6825).epsilon(1e-3));
    CHECK(rep.bound_geometric);
    CHECK(rep.c_upper >= rep.energy_at_zero);
    CHECK_THROWS_AS(ray_energy_grid(u0, pc, -1.0, L, p), std::domain_error);
}
