#pragma once

#include "qcurv/grid.hpp"

#include <array>
#include <optional>
#include <string>

namespace qcurv {

// Curvature data entering P u = Delta^2 u - d_i(C_ij d_j u),
// C = (2/3) R delta - 2 Ric.  Ricci components are stored for i <= j.
struct PaneitzCoefficients {
    bool flat = true;
    std::optional<ScalarField> scalar_curvature;
    std::array<ScalarField, 10> ricci;

    static PaneitzCoefficients flat_model() { return {}; }
    static PaneitzCoefficients from_fields(ScalarField R, std::array<ScalarField, 10> ric);
    static PaneitzCoefficients constant(GridSpec spec, double R, const std::array<std::array<double, 4>, 4>& ric);

    static int component(int i, int j);
    const ScalarField& ric(int i, int j) const { return ricci[component(i, j)]; }
    // C_ij evaluated on the grid.
    ScalarField tensor(int i, int j) const;
};

ScalarField apply_paneitz(const ScalarField& u, const PaneitzCoefficients& c);
double quadratic_form(const ScalarField& u, const ScalarField& v, const PaneitzCoefficients& c);

struct PositivityReport {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    int fields_tested = 0;
    std::string worst_probe;
};

// Ratio <Pu,u>/<Delta u,Delta u> over random mean-zero fields and every single
// Fourier mode with |k| <= 4.  Throws std::domain_error on a negative ratio.
PositivityReport positivity_check(const PaneitzCoefficients& c, GridSpec spec, int trials,
                                  unsigned long long seed = 1);

}  // namespace qcurv
