#include "qcurv/comparison.hpp"

#include "qcurv/radial.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace qcurv {

namespace {

double s5(double x) {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}
double s5_prime(double x) {
    if (x <= 0 || x >= 1) return 0.0;
    double y = x * (1.0 - x);
    return 30.0 * y * y;
}
double s5_second(double x) {
    if (x <= 0 || x >= 1) return 0.0;
    return 60.0 * x * (1.0 + x * (-3.0 + 2.0 * x));
}
// integral of s5 over [0, x], x in [0,1]
double s5_integral(double x) {
    x = std::clamp(x, 0.0, 1.0);
    double x4 = x * x * x * x;
    return x4 * (2.5 + x * (-3.0 + x));
}

constexpr double kGeometric = 16.0 * kPi * kPi * kPi * kPi;  // (2 pi)^4

void require_lambda(double lambda, const char* where) {
    if (!(lambda > 0 && lambda < 0.25)) {
        std::ostringstream os;
        os << where << ": lambda = " << lambda << " outside (0, 1/4)";
        throw std::invalid_argument(os.str());
    }
}

// Knots of z_lambda in r: the plateau edge, the two ramp ends of xi_delta,
// sqrt(lambda), the start of the tau transition and 1.
std::vector<double> radial_knots(double lambda, const CutoffParams& p) {
    double d = delta_of(lambda);
    return {lambda, std::exp(-d * (2.0 - p.blend)), std::exp(-d * (1.0 + p.blend)), std::sqrt(lambda), 0.5, 1.0};
}

// Log-spaced Gauss-Legendre panels on [knots.front(), knots.back()], at least
// `base` per factor 2 in r, aligned with every knot.
LineRule knot_rule(const std::vector<double>& knots, int base) {
    LineRule rule;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        double a = knots[i], b = knots[i + 1];
        if (!(b > a)) continue;
        int panels = base * std::max(1, int(std::ceil(std::log2(b / a))));
        rule.append(LineRule::logarithmic(a, b, panels));
    }
    return rule;
}

struct Pieces {
    double I = 0, II = 0, III = 0, III_printed = 0, M2 = 0, M3 = 0;
};

Pieces appendix_pieces(double lambda, const CutoffParams& p, int N, double amplitude, int base) {
    auto k = radial_knots(lambda, p);
    RadialGrid inner = RadialGrid::from_rule(knot_rule({k[0], k[1], k[2], k[3]}, base));
    RadialGrid middle = RadialGrid::from_rule(knot_rule({k[3], k[4]}, base));
    RadialGrid outer = RadialGrid::uniform(0.5, 1.0, 2 * base);
    auto sq = [&](double r) {
        double v = z_laplacian(r, lambda, p);
        return v * v;
    };
    double sl = std::sqrt(lambda);
    auto h = [&](double r) { return amplitude * std::pow(sl * r, N - 1); };
    auto m2 = [&](double r) { return 2.0 * z_laplacian(r, lambda, p) * z_radial_prime(r, lambda, p) * h(r); };
    auto m3 = [&](double r) {
        double v = z_radial_prime(r, lambda, p) * h(r);
        return v * v;
    };
    Pieces out;
    out.I = radial_quadrature(sq, inner);
    out.II = radial_quadrature(sq, middle);
    out.III = radial_quadrature(sq, outer);
    out.III_printed = radial_quadrature(
        [](double r) {
            double v = z_laplacian_printed(r);
            return v * v;
        },
        outer);
    for (const RadialGrid* g : {&inner, &middle, &outer}) {
        out.M2 += radial_quadrature(m2, *g);
        out.M3 += radial_quadrature(m3, *g);
    }
    return out;
}

double rel_change(double a, double b) {
    double s = std::max(std::abs(a), std::abs(b));
    return s > 0 ? std::abs(a - b) / s : 0.0;
}

}  // namespace

CutoffParams CutoffParams::make(double A0) {
    if (!(A0 > 1.0 && A0 < 2.0)) {
        std::ostringstream os;
        os << "CutoffParams: A0 = " << A0 << " outside (1, 2)";
        throw std::invalid_argument(os.str());
    }
    CutoffParams p;
    p.A0 = A0;
    p.A = std::min(A0, 1.5);
    p.blend = 2.0 * (p.A - 1.0) / (2.0 * p.A - 1.0);
    p.xi_second_sup = 1.875 * p.A / p.blend;
    return p;
}

double xi(double t, const CutoffParams& p) {
    if (t <= 1.0) return t;
    if (t >= 2.0) return 2.0;
    double a = p.blend, A = p.A, s = t - 1.0;
    if (s <= a) return t + (A - 1.0) * a * s5_integral(s / a);
    double rise_end = 1.0 + a + 0.5 * (A - 1.0) * a;
    if (s <= 1.0 - a) return rise_end + A * (s - a);
    double plateau_end = rise_end + A * (1.0 - 2.0 * a);
    double sig = s - (1.0 - a);
    return plateau_end + A * (sig - a * s5_integral(sig / a));
}

double xi_prime(double t, const CutoffParams& p) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    double a = p.blend, A = p.A, s = t - 1.0;
    if (s <= a) return 1.0 + (A - 1.0) * s5(s / a);
    if (s <= 1.0 - a) return A;
    return A * (1.0 - s5((s - (1.0 - a)) / a));
}

double xi_second(double t, const CutoffParams& p) {
    if (t <= 1.0 || t >= 2.0) return 0.0;
    double a = p.blend, A = p.A, s = t - 1.0;
    if (s <= a) return (A - 1.0) * s5_prime(s / a) / a;
    if (s <= 1.0 - a) return 0.0;
    return -A * s5_prime((s - (1.0 - a)) / a) / a;
}

double delta_of(double lambda) { return 0.5 * std::log(1.0 / lambda); }

double xi_delta(double t, double delta, const CutoffParams& p) { return delta * xi(t / delta, p); }
double xi_delta_prime(double t, double delta, const CutoffParams& p) { return xi_prime(t / delta, p); }
double xi_delta_second(double t, double delta, const CutoffParams& p) { return xi_second(t / delta, p) / delta; }

double tau(double r) {
    if (r <= 0.5) return 1.0;
    if (r >= 1.0) return 0.0;
    return 1.0 - s5(2.0 * r - 1.0);
}
double tau_prime(double r) { return -2.0 * s5_prime(2.0 * r - 1.0); }
double tau_second(double r) { return -4.0 * s5_second(2.0 * r - 1.0); }

double z_radial(double r, double lambda, const CutoffParams& p) {
    double l = std::log(1.0 / lambda);
    if (r <= lambda) return l;
    if (r >= 1.0) return 0.0;
    double t = std::log(1.0 / r);
    return xi_delta(t, 0.5 * l, p) * tau(r);
}

double z_radial_prime(double r, double lambda, const CutoffParams& p) {
    if (r <= lambda || r >= 1.0) return 0.0;
    double t = std::log(1.0 / r), d = delta_of(lambda);
    if (r <= std::sqrt(lambda)) return -xi_delta_prime(t, d, p) / r;
    return -tau(r) / r + t * tau_prime(r);
}

double z_laplacian(double r, double lambda, const CutoffParams& p) {
    if (r <= lambda || r >= 1.0) return 0.0;
    double t = std::log(1.0 / r), d = delta_of(lambda);
    if (r <= std::sqrt(lambda)) return (xi_delta_second(t, d, p) - 2.0 * xi_delta_prime(t, d, p)) / (r * r);
    if (r <= 0.5) return -2.0 / (r * r);
    return -2.0 * tau(r) / (r * r) - tau_prime(r) / r * (2.0 - 3.0 * t) + t * tau_second(r);
}

double z_laplacian_printed(double r) {
    if (r <= 0.5 || r >= 1.0) return r <= 0.5 ? -2.0 / (r * r) : 0.0;
    double t = std::log(1.0 / r);
    return -2.0 * tau(r) / (r * r) - tau_prime(r) / r * (2.0 + 5.0 * t) + t * tau_second(r);
}

double z_lambda(const Point4& x, double lambda, const CutoffParams& p) {
    double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    return z_radial(r, lambda, p);
}

double w_lambda(const Point4& x, double lambda, double L, const CutoffParams& p) {
    double s = L / std::sqrt(lambda);
    return z_lambda({s * x[0], s * x[1], s * x[2], s * x[3]}, lambda, p);
}

ScalarField w_lambda_field(GridSpec spec, double lambda, double L, const CutoffParams& p) {
    double support = std::sqrt(lambda) / L;
    if (support < 4.0 * spec.spacing()) {
        std::ostringstream os;
        os << "w_lambda under-resolved: support radius " << support << " < 4 grid spacings (" << 4.0 * spec.spacing()
           << "); use a finer grid or a larger lambda";
        throw std::domain_error(os.str());
    }
    if (support >= kPi) throw std::domain_error("w_lambda: support radius wraps around the torus");
    Point4 origin{0, 0, 0, 0};
    double s = L / std::sqrt(lambda);
    return sample([&](const Point4& x) { return z_radial(s * periodic_distance(x, origin), lambda, p); }, spec);
}

double choose_L(const PrescribedCurvature& pc, double lambda0) {
    pc.validate();
    if (!(lambda0 > 0 && lambda0 < 1)) throw std::invalid_argument("choose_L: lambda0 outside (0,1)");
    // 4 sin^2(x/2) <= x^2, so |f0(x)| <= alpha_max |x|^2 and the ball bound needs L^2 >= 2 alpha_max
    double L = std::sqrt(2.0 * pc.alpha_max());
    double floor = std::sqrt(lambda0);
    if (L <= floor) L = std::nextafter(floor, INFINITY);
    return L;
}

AppendixIntegrals appendix_integrals(double lambda, const CutoffParams& p, int N, double amplitude) {
    require_lambda(lambda, "appendix_integrals");
    if (N < 5) throw std::invalid_argument("appendix_integrals: N must be at least 5");
    std::ostringstream trace;
    Pieces prev = appendix_pieces(lambda, p, N, amplitude, 1);
    int base = 1;
    double err = INFINITY;
    for (int k = 0; k < 6; ++k) {
        base *= 2;
        Pieces cur = appendix_pieces(lambda, p, N, amplitude, base);
        err = std::max({rel_change(prev.I, cur.I), rel_change(prev.II, cur.II), rel_change(prev.III, cur.III),
                        rel_change(prev.M2, cur.M2), rel_change(prev.M3, cur.M3)});
        trace << " panels/octave " << base << ": change " << err << ";";
        prev = cur;
        if (err <= 1e-12) break;
    }
    if (!(err <= 1e-12)) throw std::runtime_error("appendix_integrals: quadrature not converged:" + trace.str());
    AppendixIntegrals a;
    double l = std::log(1.0 / lambda), xs = p.xi_second_sup, A0 = p.A0, pi2 = kPi * kPi;
    a.lambda = lambda;
    a.I = prev.I;
    a.II = prev.II;
    a.III = prev.III;
    a.III_printed = prev.III_printed;
    a.M2 = prev.M2;
    a.M3 = prev.M3;
    a.M1 = a.I + a.II + a.III;
    a.I_bound = 4.0 * pi2 * (xs * xs / l + 2.0 * A0 * xs + A0 * A0 * l);
    a.II_closed = 4.0 * pi2 * l - 8.0 * pi2 * std::log(2.0);
    // l >= log 4 for lambda < 1/4, and III does not depend on lambda
    a.C0 = 4.0 * pi2 * (xs * xs / std::log(4.0) + 2.0 * A0 * xs) - 8.0 * pi2 * std::log(2.0) + a.III;
    a.M1_bound = 4.0 * pi2 * (A0 * A0 + 1.0) * l + a.C0;
    a.quadrature_error = err;
    a.panels = base;
    return a;
}

double appendix_I_sigma(double lambda, const CutoffParams& p) {
    require_lambda(lambda, "appendix_I_sigma");
    using G = boost::math::quadrature::gauss<double, kGaussOrder>;
    double d = delta_of(lambda), a = p.blend;
    double knots[] = {1.0, 1.0 + a, 2.0 - a, 2.0};
    double s = 0;
    for (int i = 0; i < 3; ++i) {
        s += G::integrate(
            [&](double sig) {
                double v = xi_second(sig, p) / d - 2.0 * xi_prime(sig, p);
                return v * v;
            },
            knots[i], knots[i + 1]);
    }
    return kSphereArea * d * s;
}

double loglog_slope(const std::vector<double>& lambdas, const std::vector<double>& values) {
    if (lambdas.size() != values.size() || lambdas.size() < 2)
        throw std::invalid_argument("loglog_slope: need at least two matching points");
    double n = double(lambdas.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0 && values[i] > 0)) throw std::domain_error("loglog_slope: nonpositive data");
        double x = std::log(lambdas[i]), y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

void finish_report(TestFunctionReport& rep, const std::function<double(double)>& E, const AppendixIntegrals& A,
                   const RayOptions& opts) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rep.energies.size(); ++i)
        if (rep.energies[i] > rep.energies[best]) best = i;
    rep.s_star = rep.s_values[best];
    rep.ray_max = rep.energies[best];
    if (best > 0 && best + 1 < rep.energies.size()) {
        auto r = boost::math::tools::brent_find_minima([&](double s) { return -E(s); }, rep.s_values[best - 1],
                                                       rep.s_values[best + 1], 50);
        if (-r.second >= rep.ray_max) {
            rep.s_star = r.first;
            rep.ray_max = -r.second;
        }
    }
    double l = std::log(1.0 / rep.lambda);
    rep.c_upper = rep.ray_max;
    rep.increment_geometric = (rep.c_upper - rep.energy_at_zero) * kGeometric;
    rep.K = opts.K;
    rep.bound_normalised = rep.c_upper <= opts.K * l;
    rep.bound_geometric = rep.increment_geometric <= opts.K * l;
    rep.c_N = kPi * kPi / (4.0 * std::pow(rep.L, 4));
    rep.cbar_gap = rep.increment_geometric - rep.s_star * rep.s_star * A.M1;
    rep.m1_bound = A.M1_bound;
}

std::vector<double> s_grid(double s_max, int samples) {
    if (samples < 3 || !(s_max > 0)) throw std::invalid_argument("ray_energy: bad s range");
    std::vector<double> s(samples);
    for (int i = 0; i < samples; ++i) s[i] = s_max * i / (samples - 1);
    return s;
}

}  // namespace

TestFunctionReport ray_energy_grid(const ScalarField& u0, const PrescribedCurvature& pc, double q0, double L,
                                   const CutoffParams& p, const RayOptions& opts) {
    require_lambda(pc.lambda, "ray_energy_grid");
    ScalarField w = w_lambda_field(u0.spec, pc.lambda, L, p);
    ScalarField f = f_lambda_field(pc, u0.spec);
    AppendixIntegrals A = appendix_integrals(pc.lambda, p, 5);
    TestFunctionReport rep;
    rep.mode = "grid";
    rep.lambda = pc.lambda;
    rep.L = L;
    rep.paneitz_form = quadratic_form(w, w, PaneitzCoefficients::flat_model());
    rep.paneitz_form_geometric = rep.paneitz_form * kGeometric;
    auto E = [&](double s) {
        ScalarField v = u0;
        v.axpy(s, w);
        try {
            return energy(v, f, q0).total;
        } catch (const std::overflow_error&) {
            return -double(INFINITY);
        }
    };
    rep.energy_at_zero = E(0.0);
    rep.s_values = s_grid(opts.s_max, opts.samples);
    for (double s : rep.s_values) rep.energies.push_back(E(s));
    finish_report(rep, E, A, opts);
    return rep;
}

TestFunctionReport ray_energy_radial(const ScalarField& u0, const PrescribedCurvature& pc, double q0, double L,
                                     const CutoffParams& p, const RayOptions& opts) {
    require_lambda(pc.lambda, "ray_energy_radial");
    const double lambda = pc.lambda, rho = std::sqrt(lambda) / L;
    if (rho >= kPi) throw std::domain_error("ray_energy_radial: support radius wraps around the torus");
    PrescribedCurvature base = pc;
    base.lambda = 0.0;
    ScalarField e4 = exp4(u0);
    ScalarField g0 = product(f_lambda_field(base, u0.spec), e4);
    Point4 origin{0, 0, 0, 0};
    ShellSpectrum G0 = shell_spectrum(g0, origin), Ex = shell_spectrum(e4, origin);
    AppendixIntegrals A = appendix_integrals(lambda, p, 5);

    // y-quadrature over the unit ball with panels aligned to the knots of z
    LineRule rule = LineRule::uniform(0.0, lambda, 1);
    rule.append(knot_rule(radial_knots(lambda, p), 4));
    RadialGrid Y = RadialGrid::from_rule(rule);
    const double rho4 = rho * rho * rho * rho;
    std::vector<double> z(Y.nodes.size()), wg(Y.nodes.size()), wl(Y.nodes.size());
    double J1 = 0;
    for (std::size_t i = 0; i < Y.nodes.size(); ++i) {
        double y = Y.nodes[i];
        z[i] = z_radial(y, lambda, p);
        double g = G0.spherical_mean(rho * y), e = Ex.spherical_mean(rho * y);
        wg[i] = rho4 * Y.weights[i] * g;
        wl[i] = rho4 * Y.weights[i] * (g + lambda * e);
        J1 += wg[i] * z[i];
    }
    ScalarField f = f_lambda_field(pc, u0.spec);
    TestFunctionReport rep;
    rep.mode = "radial";
    rep.lambda = lambda;
    rep.L = L;
    rep.paneitz_form_geometric = A.M1;
    rep.paneitz_form = A.M1 / kGeometric;
    rep.energy_at_zero = energy(u0, f, q0).total;
    auto E = [&](double s) {
        double J2 = 0;
        for (std::size_t i = 0; i < z.size(); ++i) J2 += wl[i] * std::expm1(4.0 * s * z[i]);
        return rep.energy_at_zero + (s * s * A.M1 + 4.0 * s * J1 - J2) / kGeometric;
    };
    double l = std::log(1.0 / lambda);
    double s_max = std::min(opts.s_max, 650.0 / (4.0 * l));
    rep.s_values = s_grid(s_max, opts.samples);
    for (double s : rep.s_values) rep.energies.push_back(E(s));
    finish_report(rep, E, A, opts);
    return rep;
}

void write_appendix_csv(const std::string& path, const std::vector<AppendixIntegrals>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << std::setprecision(17);
    os << "lambda,I,I_bound,II,II_closed,III,III_printed,M1,M1_bound,C0,M2,M3,quadrature_error\n";
    for (const auto& a : rows)
        os << a.lambda << ',' << a.I << ',' << a.I_bound << ',' << a.II << ',' << a.II_closed << ',' << a.III << ','
           << a.III_printed << ',' << a.M1 << ',' << a.M1_bound << ',' << a.C0 << ',' << a.M2 << ',' << a.M3 << ','
           << a.quadrature_error << '\n';
}

void write_sweep_csv(const std::string& path, const std::vector<AppendixIntegrals>& integrals,
                     const std::vector<TestFunctionReport>& reports) {
    if (integrals.size() != reports.size()) throw std::invalid_argument("write_sweep_csv: row count mismatch");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << std::setprecision(17);
    os << "lambda,I,II,III,M1,M2,M3,paneitz_form,s_star,c_upper,increment_geometric,K_log,bound_geometric\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& a = integrals[i];
        const auto& r = reports[i];
        os << r.lambda << ',' << a.I << ',' << a.II << ',' << a.III << ',' << a.M1 << ',' << a.M2 << ',' << a.M3
           << ',' << r.paneitz_form << ',' << r.s_star << ',' << r.c_upper << ',' << r.increment_geometric << ','
           << r.K * std::log(1.0 / r.lambda) << ',' << (r.bound_geometric ? 1 : 0) << '\n';
    }
}

}  // namespace qcurv
