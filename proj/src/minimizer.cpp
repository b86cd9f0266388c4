#include "qcurv/minimizer.hpp"

#include "qcurv/linalg.hpp"
#include "qcurv/snapshot.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace qcurv {

ScalarField apply_flat_inverse(const ScalarField& r, double quartic_scale, double shift) {
    Spectrum s = forward(r);
    for_each_mode(r.spec, [&](std::size_t i, const Index4& k) {
        double q = double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2] + double(k[3]) * k[3];
        s.coeffs[i] /= quartic_scale * q * q + shift;
    });
    return inverse(s);
}

namespace {

std::string format_trace(const std::vector<NewtonStep>& trace) {
    std::ostringstream os;
    os << "newton trace (it, energy, grad_max, step, cg):";
    for (const auto& s : trace)
        os << "\n  " << s.iteration << "  " << std::setprecision(15) << s.energy << "  " << std::setprecision(4)
           << s.grad_max << "  " << s.step << "  " << s.linear_iterations;
    return os.str();
}

double safe_energy(const Functional& F, const ScalarField& u) {
    try {
        return F.energy(u).total;
    } catch (const std::overflow_error&) {
        return INFINITY;
    }
}

}  // namespace

SolveResult newton_minimize(const Functional& F, ScalarField init, const SolveOptions& opts) {
    if (!(opts.tol_grad > 0)) throw std::invalid_argument("tol_grad must be positive");
    require_same_grid(init, F.f, "newton_minimize");
    SolveResult res;
    ScalarField u = std::move(init);
    GridSpec spec = u.spec;
    double E = F.energy(u).total;
    for (int it = 0;; ++it) {
        ScalarField g = F.gradient(u);
        double gmax = max_abs(g);
        res.trace.push_back({it, E, gmax, 0.0, 0});
        if (gmax <= opts.tol_grad) break;
        if (it >= opts.max_newton)
            throw std::runtime_error("newton_minimize: no convergence in " + std::to_string(opts.max_newton) +
                                     " iterations\n" + format_trace(res.trace));
        HessianOperator H = F.hessian(u);
        double shift = 16.0 * mean(pointwise(H.weight(), [](double x) { return std::abs(x); })) + 1e-8;
        LinearMap A = [&](const Vec& w) { return H(ScalarField(spec, w)).values; };
        LinearMap Minv = [&](const Vec& r) { return apply_flat_inverse(ScalarField(spec, r), 2.0, shift).values; };
        Vec rhs = scaled(-1.0, g.values);
        // forcing term: tighter as the gradient shrinks
        double forcing = std::min(1e-2, std::max(opts.linear_tol, std::sqrt(gmax) * 1e-3));
        KrylovResult kr = pcg(A, rhs, Minv, mean_dot, forcing, opts.max_linear);
        ScalarField d(spec, kr.x);
        double slope = inner(g, d);
        if (!(slope < 0)) {
            d = apply_flat_inverse(g, 2.0, shift);
            d *= -1.0;
            slope = inner(g, d);
        }
        res.trace.back().linear_iterations = kr.iterations;
        double t = 1.0;
        bool accepted = false;
        for (int k = 0; k <= opts.linesearch.max_backtracks; ++k, t *= opts.linesearch.factor) {
            ScalarField trial = u;
            trial.axpy(t, d);
            double Et = safe_energy(F, trial);
            bool armijo = Et <= E + opts.linesearch.sufficient_decrease * t * slope;
            // near convergence energy differences drown in rounding; accept a
            // full step that reduces the gradient instead
            bool rounding = k == 0 && std::abs(slope) < 1e-12 * std::max(1.0, std::abs(E)) && std::isfinite(Et) &&
                            Et <= E + 1e-13 * std::max(1.0, std::abs(E)) && max_abs(F.gradient(trial)) < gmax;
            if (armijo || rounding) {
                u = std::move(trial);
                E = Et;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw std::runtime_error("newton_minimize: line search failed\n" + format_trace(res.trace));
        res.trace.back().step = t;
    }
    res.energy = F.energy(u);
    res.grad_max = res.trace.back().grad_max;
    res.iterations = int(res.trace.size()) - 1;
    res.u = std::move(u);
    return res;
}

SolveResult solve_unique_min(const ScalarField& f, double q0, const PaneitzCoefficients& c, const SolveOptions& opts,
                             std::optional<ScalarField> init) {
    if (!(q0 < 0)) throw std::invalid_argument("solve_unique_min: Q0 must be negative");
    if (max_value(f) > 0)
        throw std::invalid_argument("solve_unique_min: f has a positive part; the convex theory needs f <= 0");
    if (min_value(f) == 0) throw std::invalid_argument("solve_unique_min: f vanishes identically");
    Functional F{f, q0, c};
    ScalarField u0 = init ? *init : ScalarField(f.spec, 0.0);
    return newton_minimize(F, std::move(u0), opts);
}

NuEstimate verify_relative_min(const ScalarField& u, const ScalarField& f, const PaneitzCoefficients& c,
                               const EigenOptions& eo) {
    GridSpec spec = u.spec;
    ScalarField fe = product(f, exp4(u));
    LinearMap T = [&](const Vec& r) { return apply_flat_inverse(ScalarField(spec, r), 1.0, 1.0).values; };
    auto pencil = [&](const ScalarField& weight, double pscale) {
        // w -> (pscale P w + weight w, P w + w)
        return PencilMap([&, pscale](const Vec& w) {
            ScalarField pw = apply_paneitz(ScalarField(spec, w), c);
            Vec a(w.size()), b(w.size());
            for (std::size_t i = 0; i < w.size(); ++i) {
                a[i] = pscale * pw[i] + weight[i] * w[i];
                b[i] = pw[i] + w[i];
            }
            return std::make_pair(std::move(a), std::move(b));
        });
    };
    auto start_block = [&](const ScalarField& hot) {
        std::vector<Vec> start;
        start.push_back(Vec(spec.size(), 1.0));
        if (max_abs(hot) > 0) start.push_back(hot.values);
        for (int j = int(start.size()); j < eo.block; ++j)
            start.push_back(random_bandlimited(spec, spec.n / 2, eo.seed + 101ull * j).values);
        return start;
    };
    NuEstimate nu;
    // Lower bound: A >= B - D with D = (8 f e^{4u} + 1)_+, so nu >= 1 - kappa_max(D, B).
    ScalarField d = pointwise(fe, [](double x) { return std::max(0.0, 8.0 * x + 1.0); });
    if (max_abs(d) == 0) {
        nu.lower_bound = 1.0;
    } else {
        ScalarField negd = -1.0 * d;
        EigenEstimate top = lobpcg_smallest(pencil(negd, 0.0), T, mean_dot, start_block(d), eo.tol, eo.max_iter);
        double kappa = -top.value;
        nu.lower_bound = top.converged ? 1.0 - kappa * (1.0 + 10.0 * top.residual) : -INFINITY;
    }
    ScalarField v = -8.0 * fe;
    ScalarField hot = pointwise(fe, [](double x) { return x > 0 ? x : 0.0; });
    EigenEstimate est = lobpcg_smallest(pencil(v, 1.0), T, mean_dot, start_block(hot), eo.tol, eo.max_iter);
    nu.value = est.value;
    nu.residual = est.residual;
    nu.iterations = est.iterations;
    nu.converged = est.converged;
    for (double r : est.ritz)
        if (r < 0) ++nu.negative_directions;
    return nu;
}

Branch continue_branch(const PrescribedCurvature& pc, double q0, const std::vector<double>& lambda_grid,
                       GridSpec spec, const SolveOptions& opts, const PaneitzCoefficients& c, const EigenOptions& eo) {
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        if (!(lambda_grid[i] > 0)) throw std::invalid_argument("continue_branch: lambda values must be positive");
        if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1]))
            throw std::invalid_argument("continue_branch: lambda grid must be strictly increasing");
    }
    PrescribedCurvature p0 = pc;
    p0.lambda = 0.0;
    ScalarField f0 = f_lambda_field(p0, spec);
    SolveResult base = solve_unique_min(f0, q0, c, opts);
    auto make_entry = [&](double lam, const ScalarField& f, SolveResult&& s) {
        BranchEntry e;
        e.lambda = lam;
        e.energy = s.energy;
        e.grad_max = s.grad_max;
        e.volume = volume(s.u);
        e.kp_residual = kp_residual(s.u, f, q0);
        e.nu = verify_relative_min(s.u, f, c, eo);
        e.u = std::move(s.u);
        return e;
    };
    Branch br;
    br.entries.push_back(make_entry(0.0, f0, std::move(base)));
    for (double lam : lambda_grid) {
        PrescribedCurvature pl = pc;
        pl.lambda = lam;
        ScalarField f = f_lambda_field(pl, spec);
        const auto& last = br.entries.back();
        ScalarField guess = last.u;
        if (br.entries.size() >= 2) {
            // secant predictor along the branch
            const auto& prev = br.entries[br.entries.size() - 2];
            double s = (lam - last.lambda) / (last.lambda - prev.lambda);
            guess.axpy(s, last.u - prev.u);
        }
        try {
            SolveResult s = newton_minimize(Functional{f, q0, c}, guess, opts);
            BranchEntry e = make_entry(lam, f, std::move(s));
            if (!(e.nu.value > 0) || !e.nu.conclusive()) {
                std::ostringstream os;
                os << "relative-minimum check failed at lambda = " << lam << " (nu_est = " << e.nu.value
                   << (e.nu.conclusive() ? "" : ", inconclusive") << ")";
                br.truncated = true;
                br.lambda0_empirical = lam;
                br.failure = os.str();
                break;
            }
            br.entries.push_back(std::move(e));
        } catch (const std::exception& ex) {
            br.truncated = true;
            br.lambda0_empirical = lam;
            br.failure = std::string("newton failed at lambda = ") + std::to_string(lam) + ": " + ex.what();
            break;
        }
    }
    return br;
}

std::vector<std::string> write_branch(const Branch& b, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    std::string index = dir + "/index.csv";
    std::ofstream csv(index);
    csv << "lambda,quadratic,linear,exponential,energy,nu_est,nu_converged,volume,grad_max,kp_residual,snapshot\n";
    csv << std::setprecision(17);
    for (std::size_t i = 0; i < b.entries.size(); ++i) {
        const auto& e = b.entries[i];
        std::ostringstream name;
        name << "branch_" << std::setw(4) << std::setfill('0') << i << ".qc4f";
        std::string path = dir + "/" + name.str();
        write_snapshot(path, e.u, e.lambda);
        paths.push_back(path);
        csv << e.lambda << ',' << e.energy.quadratic << ',' << e.energy.linear << ',' << e.energy.exponential << ','
            << e.energy.total << ',' << e.nu.value << ',' << (e.nu.converged ? 1 : 0) << ',' << e.volume << ','
            << e.grad_max << ',' << e.kp_residual << ',' << name.str() << '\n';
    }
    paths.push_back(index);
    return paths;
}

}  // namespace qcurv
