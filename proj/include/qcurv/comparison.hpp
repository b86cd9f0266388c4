#pragma once

#include "qcurv/energy.hpp"
#include "qcurv/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qcurv {

// xi(t) = t on [0,1], 2 on [2,inf).  On (1,2) xi' rises from 1 to A, stays at
// A and drops to 0, each ramp a quintic smoothstep of width a = 2(A-1)/(2A-1)
// so that xi(2) = 2.  A = min(A0, 1.5) keeps the two ramps disjoint.
struct CutoffParams {
    double A0 = 1.1;
    double A = 1.1;              // sup xi'
    double blend = 1.0 / 6.0;    // ramp width a
    double xi_second_sup = 0.0;  // ||xi''||_inf = 1.875 A / a

    static CutoffParams make(double A0);
};

double xi(double t, const CutoffParams& p);
double xi_prime(double t, const CutoffParams& p);
double xi_second(double t, const CutoffParams& p);

// delta(lambda) = log(1/lambda)/2.
double delta_of(double lambda);
double xi_delta(double t, double delta, const CutoffParams& p);
double xi_delta_prime(double t, double delta, const CutoffParams& p);
double xi_delta_second(double t, double delta, const CutoffParams& p);

// Radial cutoff: 1 on [0,1/2], 1 - S5(2r-1) on [1/2,1], 0 beyond.
double tau(double r);
double tau_prime(double r);
double tau_second(double r);

// Radial profile of z_lambda and its exact first derivative and Laplacian in R^4.
double z_radial(double r, double lambda, const CutoffParams& p);
double z_radial_prime(double r, double lambda, const CutoffParams& p);
double z_laplacian(double r, double lambda, const CutoffParams& p);
// The outer-annulus Laplacian with the coefficient 2 + 5 log(1/r) in place of 2 - 3 log(1/r).
double z_laplacian_printed(double r);

double z_lambda(const Point4& x, double lambda, const CutoffParams& p);
// w(x) = z(L x / sqrt(lambda)); x is a point of R^4 (not reduced mod 2 pi).
double w_lambda(const Point4& x, double lambda, double L, const CutoffParams& p);
// w sampled on the torus around the origin; throws std::domain_error when the
// support radius sqrt(lambda)/L is below 4 grid spacings.
ScalarField w_lambda_field(GridSpec spec, double lambda, double L, const CutoffParams& p);

// Smallest admissible L: f0 >= -lambda/2 on B(sqrt(lambda)/L) for lambda <= lambda0
// and L > sqrt(lambda0).  For the builtin family |f0| <= alpha_max |x|^2 globally.
double choose_L(const PrescribedCurvature& pc, double lambda0);

struct AppendixIntegrals {
    double lambda = 0.0;
    double I = 0.0;
    double I_bound = 0.0;         // 4 pi^2 [||xi''||^2/l + 2 A0 ||xi''|| + A0^2 l]
    double II = 0.0;
    double II_closed = 0.0;       // 4 pi^2 l - 8 pi^2 log 2
    double III = 0.0;
    double III_printed = 0.0;
    double M1 = 0.0;              // I + II + III
    double M1_bound = 0.0;        // 4 pi^2 (A0^2 + 1) l + C0
    double C0 = 0.0;
    double M2 = 0.0;
    double M3 = 0.0;
    double quadrature_error = 0.0;  // largest change under panel doubling
    int panels = 0;
};

// Radial quadrature of the test-function integrals (geometric measure dx, not normalised).
// The remainder h(y) = amplitude (sqrt(lambda) y)^(N-1) enters M2 and M3.
// Throws std::runtime_error with the refinement trace when panel doubling
// fails to settle below 1e-12 relative.
AppendixIntegrals appendix_integrals(double lambda, const CutoffParams& p, int N, double amplitude = 1.0);

// I evaluated in the variable sigma = log(1/r)/delta, where the integrand is a
// piecewise polynomial and Gauss-Legendre is exact.
double appendix_I_sigma(double lambda, const CutoffParams& p);

// Least-squares slope of log(values) against log(lambdas).
double loglog_slope(const std::vector<double>& lambdas, const std::vector<double>& values);

struct TestFunctionReport {
    double lambda = 0.0;
    double L = 0.0;
    double paneitz_form = 0.0;           // <P w, w> in the normalised measure
    double paneitz_form_geometric = 0.0; // same in dx, equal to M1
    double m1_bound = 0.0;           // geometric
    double energy_at_zero = 0.0;         // E_lambda(u0)
    double ray_max = 0.0;
    double s_star = 0.0;
    double c_upper = 0.0;
    double increment_geometric = 0.0;    // (c_upper - E_lambda(u0)) (2 pi)^4
    double K = 0.0;
    bool bound_normalised = false;       // c_upper <= K log(1/lambda)
    bool bound_geometric = false;        // increment_geometric <= K log(1/lambda)
    double c_N = 0.0;                    // pi^2/(4 L^4)
    double cbar_gap = 0.0;               // increment_geometric - s_star^2 M1
    std::string mode;                    // "radial" or "grid"
    std::vector<double> s_values;
    std::vector<double> energies;
};

struct RayOptions {
    double s_max = 4.0;
    int samples = 401;
    double K = 40.0 * 9.869604401089358;
};

// Grid evaluation of s -> E_lambda(u0 + s w); guarded by w_lambda_field.
TestFunctionReport ray_energy_grid(const ScalarField& u0, const PrescribedCurvature& pc, double q0, double L,
                                   const CutoffParams& p, const RayOptions& opts = {});

// The same ray with w integrated exactly: <P w, w> = M1 from the radial
// quadrature, and the coupling integrals against the trigonometric
// interpolants of f0 e^{4 u0} and e^{4 u0} through their spherical means.
TestFunctionReport ray_energy_radial(const ScalarField& u0, const PrescribedCurvature& pc, double q0, double L,
                                     const CutoffParams& p, const RayOptions& opts = {});

void write_appendix_csv(const std::string& path, const std::vector<AppendixIntegrals>& rows);
void write_sweep_csv(const std::string& path, const std::vector<AppendixIntegrals>& integrals,
                     const std::vector<TestFunctionReport>& reports);

}  // namespace qcurv
