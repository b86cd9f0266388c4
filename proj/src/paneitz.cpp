#include "qcurv/paneitz.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qcurv {

int PaneitzCoefficients::component(int i, int j) {
    if (i > j) std::swap(i, j);
    // row-wise packing of the upper triangle
    static constexpr int offset[4] = {0, 4, 7, 9};
    return offset[i] + (j - i);
}

PaneitzCoefficients PaneitzCoefficients::from_fields(ScalarField R, std::array<ScalarField, 10> ric) {
    for (const auto& f : ric) require_same_grid(R, f, "PaneitzCoefficients");
    PaneitzCoefficients c;
    bool zero = max_abs(R) == 0.0;
    for (const auto& f : ric) zero = zero && max_abs(f) == 0.0;
    c.flat = zero;
    c.scalar_curvature = std::move(R);
    c.ricci = std::move(ric);
    return c;
}

PaneitzCoefficients PaneitzCoefficients::constant(GridSpec spec, double R,
                                                  const std::array<std::array<double, 4>, 4>& ric) {
    std::array<ScalarField, 10> comps;
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            if (ric[i][j] != ric[j][i]) throw std::invalid_argument("Ricci tensor must be symmetric");
            comps[component(i, j)] = ScalarField(spec, ric[i][j]);
        }
    return from_fields(ScalarField(spec, R), std::move(comps));
}

ScalarField PaneitzCoefficients::tensor(int i, int j) const {
    ScalarField t = -2.0 * ric(i, j);
    if (i == j) t.axpy(2.0 / 3.0, *scalar_curvature);
    return t;
}

ScalarField apply_paneitz(const ScalarField& u, const PaneitzCoefficients& c) {
    if (c.flat) return bilaplacian(u);
    require_same_grid(u, *c.scalar_curvature, "apply_paneitz");
    auto du = gradient(u);
    ScalarField out = bilaplacian(u);
    for (int i = 0; i < 4; ++i) {
        ScalarField flux(u.spec);
        for (int j = 0; j < 4; ++j) {
            ScalarField cij = c.tensor(i, j);
            for (std::size_t p = 0; p < u.size(); ++p) flux[p] += cij[p] * du[j][p];
        }
        out -= partial(flux, i);
    }
    return out;
}

double quadratic_form(const ScalarField& u, const ScalarField& v, const PaneitzCoefficients& c) {
    require_same_grid(u, v, "quadratic_form");
    double q = inner(laplacian(u), laplacian(v));
    if (c.flat) return q;
    require_same_grid(u, *c.scalar_curvature, "quadratic_form");
    auto du = gradient(u);
    auto dv = gradient(v);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) q += inner(product(c.tensor(i, j), du[i]), dv[j]);
    return q;
}

PositivityReport positivity_check(const PaneitzCoefficients& c, GridSpec spec, int trials,
                                  unsigned long long seed) {
    if (trials < 1) throw std::invalid_argument("positivity_check: trials must be >= 1");
    PositivityReport rep;
    rep.min_ratio = INFINITY;
    rep.max_ratio = -INFINITY;
    auto probe = [&](const ScalarField& u, const std::string& label) {
        ScalarField lu = laplacian(u);
        double denom = inner(lu, lu);
        if (denom <= 0) return;
        double ratio = quadratic_form(u, u, c) / denom;
        ++rep.fields_tested;
        if (ratio < rep.min_ratio) {
            rep.min_ratio = ratio;
            rep.worst_probe = label;
        }
        rep.max_ratio = std::max(rep.max_ratio, ratio);
    };
    for (int t = 0; t < trials; ++t) {
        std::ostringstream os;
        os << "random field #" << t;
        probe(random_bandlimited(spec, spec.n / 4, seed + 7919ull * t, true), os.str());
    }
    for (int a = 0; a <= 4; ++a)
        for (int b = -4; b <= 4; ++b)
            for (int d = -4; d <= 4; ++d)
                for (int e = -4; e <= 4; ++e) {
                    int ks = a * a + b * b + d * d + e * e;
                    if (ks == 0 || ks > 16) continue;
                    // one representative of each +/- pair
                    std::array<int, 4> k{a, b, d, e};
                    int first = 0;
                    for (int x : k)
                        if (x != 0) {
                            first = x;
                            break;
                        }
                    if (first < 0) continue;
                    for (int phase = 0; phase < 2; ++phase) {
                        ScalarField u = sample(
                            [&](const Point4& x) {
                                double arg = k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + k[3] * x[3];
                                return phase == 0 ? std::cos(arg) : std::sin(arg);
                            },
                            spec);
                        std::ostringstream os;
                        os << (phase == 0 ? "cos" : "sin") << " mode k=(" << k[0] << "," << k[1] << "," << k[2]
                           << "," << k[3] << ")";
                        probe(u, os.str());
                    }
                }
    if (rep.min_ratio < 0) {
        std::ostringstream os;
        os << "Paneitz form not nonnegative: ratio " << rep.min_ratio << " on " << rep.worst_probe;
        throw std::domain_error(os.str());
    }
    return rep;
}

}  // namespace qcurv
