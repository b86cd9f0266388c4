#include "qcurv/energy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qcurv {

void PrescribedCurvature::validate() const {
    for (double a : alphas)
        if (!(a > 0) || !std::isfinite(a)) throw std::invalid_argument("alphas must be positive and finite");
    if (!std::is_sorted(alphas.begin(), alphas.end()))
        throw std::invalid_argument("alphas must be sorted increasingly");
}

double PrescribedCurvature::f0(const Point4& x) const {
    double s = 0;
    for (int i = 0; i < 4; ++i) {
        double h = std::sin(0.5 * x[i]);
        s += alphas[i] * h * h;
    }
    return -4.0 * s;
}

std::array<double, 4> PrescribedCurvature::hessian_diagonal() const {
    return {-2 * alphas[0], -2 * alphas[1], -2 * alphas[2], -2 * alphas[3]};
}

double PrescribedCurvature::alpha_max() const { return *std::max_element(alphas.begin(), alphas.end()); }

ScalarField f_lambda_field(const PrescribedCurvature& pc, GridSpec spec) {
    pc.validate();
    return sample([&](const Point4& x) { return pc.value(x); }, spec);
}

ScalarField exp4(const ScalarField& u) {
    double m = max_value(u);
    if (4.0 * m > 700.0) {
        std::ostringstream os;
        os << "exponential overflow guard: max(u) = " << m << " exceeds 175";
        throw std::overflow_error(os.str());
    }
    return pointwise(u, [](double x) { return std::exp(4.0 * x); });
}

EnergyBreakdown energy(const ScalarField& u, const ScalarField& f, double q0, const PaneitzCoefficients& c) {
    require_same_grid(u, f, "energy");
    ScalarField e = exp4(u);
    EnergyBreakdown b;
    b.quadratic = quadratic_form(u, u, c);
    b.linear = 4.0 * q0 * mean(u);
    b.exponential = -inner(f, e);
    b.total = b.quadratic + b.linear + b.exponential;
    return b;
}

ScalarField gradient_field(const ScalarField& u, const ScalarField& f, double q0, const PaneitzCoefficients& c) {
    require_same_grid(u, f, "gradient_field");
    ScalarField e = exp4(u);
    ScalarField g = apply_paneitz(u, c);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * g[i] + 4.0 * q0 - 4.0 * f[i] * e[i];
    return g;
}

HessianOperator::HessianOperator(const ScalarField& u, const ScalarField& f, const PaneitzCoefficients& c)
    : fe4u_(product(f, exp4(u))), coeffs_(c) {}

ScalarField HessianOperator::operator()(const ScalarField& w) const {
    ScalarField h = apply_paneitz(w, coeffs_);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = 2.0 * h[i] - 16.0 * fe4u_[i] * w[i];
    return h;
}

ScalarField hessian_apply(const ScalarField& u, const ScalarField& f, const PaneitzCoefficients& c,
                          const ScalarField& w) {
    return HessianOperator(u, f, c)(w);
}

FAverage f_average(const ScalarField& u, const ScalarField& f) {
    require_same_grid(u, f, "f_average");
    if (max_value(f) > 0) throw std::invalid_argument("f_average: f has a positive part");
    double norm1 = -mean(f);
    if (norm1 <= 0) throw std::invalid_argument("f_average: f vanishes identically");
    ScalarField e = exp4(u);
    FAverage a;
    a.ubar = -inner(f, u) / norm1;
    a.jensen_lhs = -inner(f, e) / norm1;
    a.jensen_rhs = std::exp(4.0 * a.ubar);
    a.jensen_gap = a.jensen_lhs - a.jensen_rhs;
    return a;
}

double volume(const ScalarField& u) { return mean(exp4(u)); }

double kp_residual(const ScalarField& u, const ScalarField& f, double q0) { return inner(f, exp4(u)) - q0; }

}  // namespace qcurv
