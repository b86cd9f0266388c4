#include "qcurv/mountainpass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qcurv {

double Landscape::grad_max(const Vec& g) const {
    double m = 0;
    for (double x : g) m = std::max(m, std::abs(x));
    return m;
}

GridLandscape::GridLandscape(Functional F) : F_(std::move(F)) {}

double GridLandscape::energy(const Vec& u) const {
    try {
        return F_.energy(field(u)).total;
    } catch (const std::overflow_error&) {
        return INFINITY;
    }
}

Vec GridLandscape::gradient(const Vec& u) const { return F_.gradient(field(u)).values; }

Vec GridLandscape::hessian_apply(const Vec& u, const Vec& w) const {
    return F_.hessian(field(u))(field(w)).values;
}

double GridLandscape::metric_norm2(const Vec& w) const {
    ScalarField W = field(w);
    return F_.p_form(W, W) + inner(W, W);
}

double GridLandscape::shift(const Vec& u) const {
    ScalarField e = exp4(field(u));
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += std::abs(F_.f[i]) * e[i];
    return 2.0 + 16.0 * s / double(u.size());
}

Vec GridLandscape::precond(const Vec& u, const Vec& r) const {
    return apply_flat_inverse(field(r), 2.0, shift(u)).values;
}

Vec GridLandscape::precond_apply(const Vec& u, const Vec& w) const {
    ScalarField W = field(w);
    ScalarField out = bilaplacian(W);
    out *= 2.0;
    out.axpy(shift(u), W);
    return out.values;
}

double GridLandscape::entropy(const Vec& u) const { return volume(field(u)); }

double ToyLandscape::energy(const Vec& u) const {
    double x = u[0], q = u[1] - 0.25 * x * x;
    return x * x + 4.0 * q * q - x * x * x / 3.0;
}

Vec ToyLandscape::gradient(const Vec& u) const {
    double x = u[0], q = u[1] - 0.25 * x * x;
    return {2.0 * x - 4.0 * x * q - x * x, 8.0 * q};
}

Vec ToyLandscape::hessian_apply(const Vec& u, const Vec& w) const {
    double x = u[0], q = u[1] - 0.25 * x * x;
    double hxx = 2.0 - 4.0 * q + 2.0 * x * x - 2.0 * x, hxy = -4.0 * x, hyy = 8.0;
    return {hxx * w[0] + hxy * w[1], hxy * w[0] + hyy * w[1]};
}

Path initial_path(const Landscape& L, const Vec& u0, const Vec& v, int M, double reference_energy) {
    if (M < 1) throw std::invalid_argument("initial_path: need at least one segment");
    double Ev = L.energy(v);
    if (!(Ev < reference_energy)) {
        std::ostringstream os;
        os << "endpoint not below minimizer: E(v) = " << Ev << " >= " << reference_energy
           << "; increase the endpoint amplitude s";
        throw std::invalid_argument(os.str());
    }
    Path p;
    for (int j = 0; j <= M; ++j) {
        double t = double(j) / M;
        Vec n = scaled(1.0 - t, u0);
        axpy(t, v, n);
        p.nodes.push_back(std::move(n));
    }
    p.nodes.front() = u0;
    p.nodes.back() = v;
    return p;
}

namespace {

// Redistributes nodes lo..hi (both fixed) to equal arc length.
void reparametrize(const Landscape& L, std::vector<Vec>& nodes, int lo, int hi) {
    if (hi - lo < 2) return;
    std::vector<double> s(hi - lo + 1, 0.0);
    for (int j = lo + 1; j <= hi; ++j) s[j - lo] = s[j - lo - 1] + std::sqrt(L.metric_norm2(sum(nodes[j], nodes[j - 1], -1.0)));
    double total = s.back();
    if (!(total > 0)) return;
    std::vector<Vec> old(nodes.begin() + lo, nodes.begin() + hi + 1);
    int k = 0;
    for (int j = lo + 1; j < hi; ++j) {
        double target = total * (j - lo) / (hi - lo);
        while (k + 2 < int(s.size()) && s[k + 1] < target) ++k;
        double seg = s[k + 1] - s[k];
        double a = seg > 0 ? (target - s[k]) / seg : 0.0;
        Vec n = scaled(1.0 - a, old[k]);
        axpy(a, old[k + 1], n);
        nodes[j] = std::move(n);
    }
}

Vec perpendicular(const Landscape& L, const Vec& g, const Vec& tau) {
    double tt = L.dot(tau, tau);
    if (!(tt > 0)) return g;
    return sum(g, tau, -L.dot(g, tau) / tt);
}

}  // namespace

MinimaxReport optimize_path(const Landscape& L, Path& path, const PathOptions& opts) {
    auto& X = path.nodes;
    const int M = int(X.size()) - 1;
    if (M < 2) throw std::invalid_argument("optimize_path: need at least one interior node");
    const Vec start = X.front(), end = X.back();
    MinimaxReport rep;
    std::vector<double> E(M + 1);
    for (int j = 0; j <= M; ++j) E[j] = L.energy(X[j]);
    rep.initial_max = *std::max_element(E.begin(), E.end());
    std::vector<double> dt(M + 1, opts.dt);
    double seg0 = 0;
    for (int j = 1; j <= M; ++j) seg0 += std::sqrt(L.metric_norm2(sum(X[j], X[j - 1], -1.0)));
    const double max_step = opts.max_step * seg0 / M;
    std::vector<Vec> G(M + 1);
    for (int it = 0;; ++it) {
        int c = 1;
        for (int j = 1; j < M; ++j)
            if (E[j] > E[c]) c = j;
        // nodes already below the endpoint cannot carry the maximum; freezing
        // them keeps the string out of the unbounded valley beyond v
        std::vector<char> frozen(M + 1, 0);
        for (int j = 1; j < M; ++j) {
            frozen[j] = j != c && E[j] < E[M];
            G[j] = frozen[j] ? Vec(X[j].size(), 0.0) : L.gradient(X[j]);
        }
        Vec tau_c = sum(X[c + 1], X[c - 1], -1.0);
        Vec gp = perpendicular(L, G[c], tau_c);
        rep.c_est = E[c];
        rep.t_star = c;
        rep.grad_norm_at_max = L.grad_max(G[c]);
        rep.perp_grad_at_max = L.grad_max(gp);
        rep.iterations = it;
        bool climbing = it >= opts.climb_after;
        bool small = rep.perp_grad_at_max <= opts.tol && (!opts.require_full_gradient || rep.grad_norm_at_max <= opts.tol);
        if (climbing && small) {
            rep.converged = true;
            break;
        }
        if (it >= opts.max_iter) break;
        for (int j = 1; j < M; ++j) {
            if (frozen[j]) continue;
            Vec d = L.precond(X[j], G[j]);
            bool climb = climbing && j == c;
            if (climb) {
                // reflect the tangential component in the preconditioner metric
                double denom = L.dot(tau_c, L.precond_apply(X[j], tau_c));
                if (denom > 0) axpy(-2.0 * L.dot(G[j], tau_c) / denom, tau_c, d);
            }
            // the climbing image cannot use the energy (it ascends along the path and the
            // energy is unbounded above), so it must not increase its gradient norm instead
            double gnorm = climb ? L.dot(G[j], L.precond(X[j], G[j])) : 0.0;
            double dn = std::sqrt(L.metric_norm2(d));
            if (dn > 0 && dt[j] * dn > max_step) dt[j] = max_step / dn;
            for (int k = 0; k < 60; ++k) {
                Vec trial = X[j];
                axpy(-dt[j], d, trial);
                double Et = L.energy(trial);
                bool ok = std::isfinite(Et);
                if (ok && climb) {
                    try {
                        Vec gt = L.gradient(trial);
                        double gn = L.dot(gt, L.precond(trial, gt));
                        ok = std::isfinite(gn) && gn <= gnorm;
                    } catch (const std::overflow_error&) {
                        ok = false;
                    }
                } else if (ok) {
                    // descending below the endpoint would take the node into the valley beyond v
                    ok = Et <= E[j] + opts.energy_slack * std::max(1.0, std::abs(E[j])) && Et >= E[M];
                }
                if (ok) {
                    X[j] = std::move(trial);
                    E[j] = Et;
                    dt[j] = std::min(opts.dt, dt[j] * 1.2);
                    break;
                }
                dt[j] *= 0.5;
                ++rep.step_halvings;
            }
        }
        std::vector<Vec> before = X;
        if (climbing) {
            reparametrize(L, X, 0, c);
            reparametrize(L, X, c, M);
        } else {
            reparametrize(L, X, 0, M);
        }
        X.front() = start;
        X.back() = end;
        std::vector<double> En(M + 1);
        En.front() = E.front();
        En.back() = E.back();
        bool finite = true;
        for (int j = 1; j < M; ++j) finite = finite && std::isfinite(En[j] = L.energy(X[j]));
        if (finite)
            E = std::move(En);
        else
            X = std::move(before);
    }
    rep.entropy_at_max = L.entropy(X[rep.t_star]);
    return rep;
}

SaddleResult newton_saddle(const Landscape& L, Vec guess, const SaddleOptions& opts) {
    SaddleResult res;
    Vec x = std::move(guess);
    Vec g = L.gradient(x);
    for (int it = 0;; ++it) {
        res.grad_max = L.grad_max(g);
        res.iterations = it;
        if (res.grad_max <= opts.tol_grad) {
            res.converged = true;
            break;
        }
        if (it >= opts.max_newton) {
            res.diagnosis = "newton iteration limit reached";
            break;
        }
        LinearMap A = [&](const Vec& w) { return L.hessian_apply(x, w); };
        LinearMap Minv = [&](const Vec& r) { return L.precond(x, r); };
        KrylovResult kr = minres(A, scaled(-1.0, g), Minv, [&](const Vec& a, const Vec& b) { return L.dot(a, b); },
                                 opts.linear_tol, opts.max_linear);
        double merit = L.dot(g, g);
        bool accepted = false;
        double t = 1.0;
        for (int k = 0; k < 40; ++k, t *= 0.5) {
            Vec trial = x;
            axpy(t, kr.x, trial);
            Vec gt;
            try {
                gt = L.gradient(trial);
            } catch (const std::overflow_error&) {
                continue;
            }
            double mt = L.dot(gt, gt);
            if (std::isfinite(mt) && mt <= (1.0 - 1e-4 * t) * merit) {
                x = std::move(trial);
                g = std::move(gt);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.diagnosis = "residual line search failed";
            break;
        }
    }
    res.energy = L.energy(x);
    res.x = std::move(x);
    return res;
}

double h2_distance(const ScalarField& a, const ScalarField& b, const PaneitzCoefficients& c) {
    ScalarField d = a - b;
    return std::sqrt(quadratic_form(d, d, c) + inner(d, d));
}

CriticalPoint refine_saddle(const GridLandscape& L, const ScalarField& guess, const ScalarField& branch_min,
                            double rho, const SaddleOptions& opts, const EigenOptions& eo) {
    CriticalPoint cp;
    SaddleResult sr = newton_saddle(L, guess.values, opts);
    cp.field = L.field(sr.x);
    cp.energy = sr.energy;
    cp.grad_max = sr.grad_max;
    if (!sr.converged) {
        cp.diagnosis = "divergence: " + sr.diagnosis;
        return cp;
    }
    const Functional& F = L.functional();
    cp.nu = verify_relative_min(cp.field, F.f, F.coeffs, eo);
    cp.negative_directions = cp.nu.negative_directions;
    cp.distance_to_branch = h2_distance(cp.field, branch_min, F.coeffs);
    cp.volume = volume(cp.field);
    if (cp.distance_to_branch <= 0.5 * rho) {
        std::ostringstream os;
        os << "converged to the branch minimizer: distance " << cp.distance_to_branch << " <= rho/2 = " << 0.5 * rho;
        cp.diagnosis = os.str();
        return cp;
    }
    cp.accepted = true;
    cp.diagnosis = cp.nu.value < 0 ? "saddle" : "critical point without a detected negative direction";
    return cp;
}

GeometryScan scan_geometry(const std::vector<GridLandscape>& landscapes, const ScalarField& u0,
                           const std::vector<ScalarField>& directions, const std::vector<double>& radii,
                           double reference) {
    if (landscapes.empty() || directions.empty() || radii.empty())
        throw std::invalid_argument("scan_geometry: empty input");
    GeometryScan gs;
    gs.radii = radii;
    gs.reference = reference;
    const GridLandscape& L0 = landscapes.front();
    for (double r : radii) {
        double m = INFINITY;
        for (const auto& d : directions) {
            double nd = std::sqrt(L0.metric_norm2(d.values));
            Vec u = u0.values;
            axpy(r / nd, d.values, u);
            for (const auto& L : landscapes) m = std::min(m, L.energy(u));
        }
        gs.min_energy.push_back(m);
    }
    // rho maximises the annulus infimum over [rho/2, rho]
    gs.beta0 = -INFINITY;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        double b = INFINITY;
        for (std::size_t k = 0; k < radii.size(); ++k)
            if (radii[k] >= 0.5 * radii[i] && radii[k] <= radii[i]) b = std::min(b, gs.min_energy[k]);
        if (b > gs.beta0) {
            gs.beta0 = b;
            gs.rho = radii[i];
        }
    }
    gs.mountain_pass = gs.beta0 > reference;
    return gs;
}

ScalarField polynomial_bump(GridSpec spec, double radius) {
    Point4 origin{0, 0, 0, 0};
    return sample(
        [&](const Point4& x) {
            double r = periodic_distance(x, origin) / radius;
            if (r >= 1) return 0.0;
            double t = 1 - r * r;
            return t * t * t;
        },
        spec);
}

std::vector<CCurveRow> c_curve(const CCurveSetup& setup, const std::vector<double>& lambdas,
                               const std::vector<double>& reference_energies) {
    if (reference_energies.size() != lambdas.size())
        throw std::invalid_argument("c_curve: one reference energy per lambda is required");
    std::vector<CCurveRow> rows;
    double anchor = -1;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        double lam = lambdas[i];
        if (i > 0 && !(lam > lambdas[i - 1])) throw std::invalid_argument("c_curve: lambdas must increase");
        if (anchor < 0 || lam > 2 * anchor) anchor = lam;
        CCurveRow row;
        row.lambda = lam;
        row.endpoint_lambda = anchor;
        row.c_derivative = std::numeric_limits<double>::quiet_NaN();
        PrescribedCurvature pc = setup.pc;
        pc.lambda = lam;
        GridLandscape L(Functional{f_lambda_field(pc, setup.spec), setup.q0, {}});
        Vec v = setup.u0.values;
        axpy(setup.s_endpoint, setup.bump.values, v);
        try {
            Path p = initial_path(L, setup.u0.values, v, setup.nodes - 1, reference_energies[i]);
            MinimaxReport rep = optimize_path(L, p, setup.path);
            row.c_est = rep.c_est;
            row.t_star = rep.t_star;
            row.grad_norm = rep.grad_norm_at_max;
            row.entropy_at_max = rep.entropy_at_max;
            row.converged = rep.converged;
            row.max_node = p.nodes[rep.t_star];
            if (!rep.converged) row.flags += "nonconverged;";
        } catch (const std::exception& e) {
            row.c_est = std::numeric_limits<double>::quiet_NaN();
            row.flags += std::string("gap:") + e.what() + ";";
        }
        rows.push_back(row);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto ok = [&](std::size_t k) { return rows[k].converged && std::isfinite(rows[k].c_est); };
        if (!ok(i)) continue;
        std::size_t lo = (i > 0 && ok(i - 1)) ? i - 1 : i, hi = (i + 1 < rows.size() && ok(i + 1)) ? i + 1 : i;
        if (hi > lo) rows[i].c_derivative = (rows[hi].c_est - rows[lo].c_est) / (rows[hi].lambda - rows[lo].lambda);
        if (i > 0 && ok(i - 1) && rows[i].c_est > rows[i - 1].c_est + 1e-6) rows[i].flags += "monotonicity;";
        double mu_cprime = rows[i].lambda * std::abs(rows[i].c_derivative);
        // 32 pi^2 is a geometric-units threshold; normalised energies carry (2pi)^-4
        double scale = std::pow(GridSpec::domain_length(), 4);
        if (std::isfinite(mu_cprime) && mu_cprime * scale > 32.0 * M_PI * M_PI) rows[i].flags += "mu_cprime_above_32pi2;";
        if (setup.K > 0 && rows[i].c_est > setup.K * std::log(1.0 / rows[i].lambda)) rows[i].flags += "above_Klog;";
    }
    return rows;
}

}  // namespace qcurv
