#pragma once

#include "qcurv/grid.hpp"
#include "qcurv/paneitz.hpp"

#include <array>

namespace qcurv {

// f_lambda = f0 + lambda with f0(x) = -4 sum_i alpha_i sin^2(x_i/2), so that
// f0 = -sum alpha_i x_i^2 + O(|x|^4) near its maximum point 0.
struct PrescribedCurvature {
    std::array<double, 4> alphas{1.0, 1.0, 1.0, 1.0};
    double lambda = 0.0;

    void validate() const;
    double f0(const Point4& x) const;
    double value(const Point4& x) const { return f0(x) + lambda; }
    // D^2 f0(0) is diagonal with entries -2 alpha_i.
    std::array<double, 4> hessian_diagonal() const;
    double alpha_max() const;
};

ScalarField f_lambda_field(const PrescribedCurvature& pc, GridSpec spec);

struct EnergyBreakdown {
    double quadratic = 0.0;    // <Pu,u>
    double linear = 0.0;       // 4 Q0 mean(u)
    double exponential = 0.0;  // -mean(f e^{4u})
    double total = 0.0;
};

// e^{4u} with the overflow guard max(4u) <= 700.
ScalarField exp4(const ScalarField& u);

EnergyBreakdown energy(const ScalarField& u, const ScalarField& f, double q0,
                       const PaneitzCoefficients& c = PaneitzCoefficients::flat_model());
ScalarField gradient_field(const ScalarField& u, const ScalarField& f, double q0,
                           const PaneitzCoefficients& c = PaneitzCoefficients::flat_model());

// w -> 2 P w - 16 f e^{4u} w, with f e^{4u} frozen at construction.
class HessianOperator {
public:
    HessianOperator(const ScalarField& u, const ScalarField& f,
                    const PaneitzCoefficients& c = PaneitzCoefficients::flat_model());
    ScalarField operator()(const ScalarField& w) const;
    const ScalarField& weight() const { return fe4u_; }  // f e^{4u}

private:
    ScalarField fe4u_;
    PaneitzCoefficients coeffs_;
};

ScalarField hessian_apply(const ScalarField& u, const ScalarField& f, const PaneitzCoefficients& c,
                          const ScalarField& w);

struct FAverage {
    double ubar = 0.0;          // mean(-f u)/||f||_1
    double jensen_lhs = 0.0;    // mean(-f e^{4u})/||f||_1
    double jensen_rhs = 0.0;    // exp(4 ubar)
    double jensen_gap = 0.0;
};
FAverage f_average(const ScalarField& u, const ScalarField& f);

double volume(const ScalarField& u);
double kp_residual(const ScalarField& u, const ScalarField& f, double q0);

// The full functional with fixed data, used by the solvers.
struct Functional {
    ScalarField f;
    double q0 = -1.0;
    PaneitzCoefficients coeffs;

    EnergyBreakdown energy(const ScalarField& u) const { return qcurv::energy(u, f, q0, coeffs); }
    ScalarField gradient(const ScalarField& u) const { return gradient_field(u, f, q0, coeffs); }
    HessianOperator hessian(const ScalarField& u) const { return HessianOperator(u, f, coeffs); }
    ScalarField apply_p(const ScalarField& u) const { return apply_paneitz(u, coeffs); }
    double p_form(const ScalarField& u, const ScalarField& v) const { return quadratic_form(u, v, coeffs); }
};

}  // namespace qcurv
