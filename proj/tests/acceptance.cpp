// Acceptance suite: one PASS/FAIL line per criterion, pinned tolerances.
#include "qcurv/blowup.hpp"
#include "qcurv/comparison.hpp"
#include "qcurv/config.hpp"
#include "qcurv/minimizer.hpp"
#include "qcurv/mountainpass.hpp"
#include "qcurv/radial.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace qcurv;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

constexpr double kPi2 = kPi * kPi;

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// 1. closed-form quadrature pieces
Verdict closed_form_integrals() {
    constexpr double kTolII = 1e-8, kIIIGrowth = 1.05, kSlopeRel = 0.05;
    constexpr int kN = 5;
    auto p = CutoffParams::make(1.1);
    double worst_ii = 0;
    for (double lam : {1e-2, 1e-4, std::exp(-10.0)}) {
        auto a = appendix_integrals(lam, p, kN);
        worst_ii = std::max(worst_ii, std::abs(a.II - a.II_closed) / std::abs(a.II_closed));
    }
    std::vector<double> lams, m3;
    double iii_first = 0, iii_max = 0;
    for (int e = 2; e <= 8; ++e) {
        double lam = std::pow(10.0, -e);
        auto a = appendix_integrals(lam, p, kN);
        if (e == 2) iii_first = a.III;
        iii_max = std::max(iii_max, a.III);
        lams.push_back(lam);
        m3.push_back(std::abs(a.M3));
    }
    double slope = loglog_slope(lams, m3);
    bool ok_ii = worst_ii <= kTolII;
    bool ok_iii = iii_max <= kIIIGrowth * iii_first;
    bool ok_slope = std::abs(slope - (kN - 3)) <= kSlopeRel * (kN - 3);
    Verdict v;
    v.pass = ok_ii && ok_iii && ok_slope;
    v.detail = "II rel err " + fmt("%.2e", worst_ii) + " (<= 1e-8) " + (ok_ii ? "ok" : "FAIL") + "; III max/III(1e-2) " +
               fmt("%.6f", iii_max / iii_first) + " (<= 1.05) " + (ok_iii ? "ok" : "FAIL") + "; M3 slope " +
               fmt("%.4f", slope) + " vs N-3 = 2 +- 5% " + (ok_slope ? "ok" : "FAIL");
    return v;
}

// 2. bubble identity and volume
Verdict bubble_identity() {
    constexpr double kTolRes = 1e-10, kTolVol = 1e-8;
    std::vector<double> rs;
    for (int i = 0; i <= 100000; ++i) rs.push_back(1000.0 * i / 100000);
    double res = bubble_residual(rs);
    auto vol = bubble_volume();
    double rel = std::abs(vol.total - 16 * kPi2) / (16 * kPi2);
    return {res <= kTolRes && rel <= kTolVol,
            "max residual on [0,1000] " + fmt("%.2e", res) + " (<= 1e-10); volume rel err " + fmt("%.2e", rel) +
                " (<= 1e-8)"};
}

// 3. convex solve
Verdict convex_solve() {
    constexpr double kTolRecover = 1e-8, kTolUnique = 1e-7, kTolResidual = 1e-8;
    GridSpec s(16);
    ScalarField ustar = sample([](const Point4& x) { return 0.05 * std::cos(x[0]) * std::cos(x[1]); }, s);
    ScalarField pu = apply_paneitz(ustar, {}), e = exp4(ustar), f(s);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = (pu[i] - 2.0) / (2 * e[i]);
    SolveOptions o;
    auto a = solve_unique_min(f, -1.0, {}, o);
    auto b = solve_unique_min(f, -1.0, {}, o, 0.5 * random_bandlimited(s, 4, 2024));
    double rec = max_abs(a.u - ustar), uni = max_abs(a.u - b.u);
    double el = std::max(a.grad_max, b.grad_max), kp = std::abs(kp_residual(a.u, f, -1.0));
    bool ok = rec <= kTolRecover && uni <= kTolUnique && el <= kTolResidual && kp <= kTolResidual;
    return {ok, "recovery " + fmt("%.2e", rec) + " (<= 1e-8); two starts " + fmt("%.2e", uni) +
                    " (<= 1e-7); EL residual " + fmt("%.2e", el) + ", kp residual " + fmt("%.2e", kp) + " (<= 1e-8)"};
}

// 4. derivative consistency
Verdict derivatives() {
    constexpr double kTolGrad = 1e-6, kTolHess = 1e-5, kH = 1e-5;
    GridSpec s(16);
    PrescribedCurvature pc;
    pc.alphas = {0.2, 0.2, 0.2, 0.2};
    pc.lambda = 0.1;
    ScalarField f = f_lambda_field(pc, s);
    ScalarField u = 0.3 * random_bandlimited(s, 3, 4242);
    ScalarField g = gradient_field(u, f, -1.0);
    HessianOperator H(u, f);
    double worst_g = 0, worst_h = 0;
    for (unsigned long long k = 0; k < 20; ++k) {
        ScalarField v = random_bandlimited(s, 3, 5000 + k);
        double fd = (energy(u + kH * v, f, -1.0).total - energy(u - kH * v, f, -1.0).total) / (2 * kH);
        double an = inner(g, v);
        worst_g = std::max(worst_g, std::abs(fd - an) / std::abs(an));
        ScalarField dg = (1.0 / (2 * kH)) * (gradient_field(u + kH * v, f, -1.0) - gradient_field(u - kH * v, f, -1.0));
        ScalarField hv = H(v);
        worst_h = std::max(worst_h, max_abs(dg - hv) / max_abs(hv));
    }
    return {worst_g <= kTolGrad && worst_h <= kTolHess,
            "gradient rel err " + fmt("%.2e", worst_g) + " (<= 1e-6); Hessian rel err " + fmt("%.2e", worst_h) +
                " (<= 1e-5) over 20 directions"};
}

// 5. branch of relative minimisers
Verdict branch() {
    constexpr double kTolRefine = 1e-6;
    GridSpec s(16);
    PrescribedCurvature pc;
    pc.alphas = {0.2, 0.2, 0.2, 0.2};
    std::vector<double> coarse = linspace(0.04, 0.24, 6), fine = linspace(0.02, 0.24, 12);
    auto bc = continue_branch(pc, -1.0, coarse, s, {});
    auto bf = continue_branch(pc, -1.0, fine, s, {});
    bool nonempty = bc.entries.size() > 1;
    double nu_min = INFINITY;
    bool conclusive = true;
    for (const auto* b : {&bc, &bf})
        for (std::size_t i = 1; i < b->entries.size(); ++i) {
            nu_min = std::min(nu_min, b->entries[i].nu.value);
            conclusive = conclusive && b->entries[i].nu.conclusive();
        }
    double change = 0;
    for (const auto& e : bc.entries)
        for (const auto& g : bf.entries)
            if (std::abs(e.lambda - g.lambda) < 1e-12) change = std::max(change, max_abs(e.u - g.u));
    bool ok = nonempty && nu_min > 0 && conclusive && change < kTolRefine;
    std::ostringstream os;
    os << bc.entries.size() - 1 << " entries on (0, " << (nonempty ? bc.entries.back().lambda : 0.0)
       << "]; min nu " << fmt("%.4f", nu_min) << (conclusive ? " (certified)" : " (not certified)")
       << "; halved-step change " << fmt("%.2e", change) << " (< 1e-6)";
    return {ok, os.str()};
}

// 6. logarithmic bound along the test-function ray
Verdict log_bound() {
    GridSpec s(16);
    PrescribedCurvature pc;
    pc.alphas = {0.2, 0.2, 0.2, 0.2};
    auto u0 = solve_unique_min(f_lambda_field(pc, s), -1.0, {}, {}).u;
    auto p = CutoffParams::make(1.1);
    double L = choose_L(pc, 0.28);
    RayOptions ro;
    ro.K = 40 * kPi2;
    std::vector<double> lams{1e-3, 1e-4, 1e-5, 1e-6, 1e-8, 1e-10};
    bool bound = true, above2 = true, decreasing = true;
    double prev = INFINITY;
    std::ostringstream os;
    os << "s_star";
    for (double lam : lams) {
        pc.lambda = lam;
        auto rep = ray_energy_radial(u0, pc, -1.0, L, p, ro);
        bound = bound && rep.bound_geometric && rep.bound_normalised;
        above2 = above2 && rep.s_star > 2;
        decreasing = decreasing && rep.s_star < prev;
        prev = rep.s_star;
        os << " " << fmt("%.4f", rep.s_star);
    }
    std::string d = "bound c <= 40pi^2 log(1/lambda) at all " + std::to_string(lams.size()) + " lambdas " +
                    (bound ? "ok" : "FAIL") + "; " + os.str() + "; s_star > 2 " + (above2 ? "ok" : "FAIL") +
                    ", decreasing " + (decreasing ? "ok" : "FAIL");
    return {bound && above2 && decreasing, d};
}

// 7. minimax machinery on the toy and monotonicity in lambda
Verdict minimax_machinery() {
    constexpr double kTolSaddle = 1e-6;
    ToyLandscape toy;
    Path path = initial_path(toy, {0, 0}, {4, 4}, 32, 0.0);
    PathOptions po;
    po.tol = 1e-8;
    auto rep = optimize_path(toy, path, po);
    auto sad = newton_saddle(toy, path.nodes[rep.t_star], {});
    double err_path = std::abs(rep.c_est - 4.0 / 3), err_sad = std::abs(sad.energy - 4.0 / 3);
    GridSpec s(8);
    PrescribedCurvature pc;
    std::vector<double> mus{0.02, 0.05, 0.1, 0.2};
    std::vector<Functional> fs;
    for (double m : mus) {
        pc.lambda = m;
        fs.push_back(Functional{f_lambda_field(pc, s), -1.0, {}});
    }
    std::size_t violations = 0;
    for (unsigned long long k = 0; k < 100; ++k) {
        ScalarField u = 0.5 * random_bandlimited(s, 3, 9000 + k);
        for (std::size_t i = 1; i < mus.size(); ++i)
            if (!(fs[i].energy(u).total <= fs[i - 1].energy(u).total)) ++violations;
    }
    bool ok = err_path <= kTolSaddle && err_sad <= kTolSaddle && sad.converged && violations == 0;
    return {ok, "toy c_est err " + fmt("%.2e", err_path) + ", refined saddle err " + fmt("%.2e", err_sad) +
                    " (<= 1e-6); monotonicity violations " + std::to_string(violations) + " of 300"};
}

// 8. second solution by mountain pass
Verdict second_solution() {
    constexpr double kTolGrad = 1e-7;
    GridSpec s(16);
    PrescribedCurvature pc;
    pc.alphas = {0.2, 0.2, 0.2, 0.2};
    std::vector<double> lams{0.1, 0.2};
    auto br = continue_branch(pc, -1.0, lams, s, {});
    if (br.entries.size() != lams.size() + 1) return {false, "branch truncated: " + br.failure};
    const ScalarField& u0 = br.entries.front().u;
    std::vector<GridLandscape> lands;
    std::vector<double> refs;
    for (std::size_t i = 0; i < lams.size(); ++i) {
        PrescribedCurvature q = pc;
        q.lambda = lams[i];
        lands.emplace_back(Functional{f_lambda_field(q, s), -1.0, {}});
        refs.push_back(br.entries[i + 1].energy.total);
    }
    ScalarField bump = polynomial_bump(s, 1.2);
    double amp = 1.0;
    for (;;) {
        Vec v = u0.values;
        axpy(amp, bump.values, v);
        bool below = true;
        for (std::size_t i = 0; i < lands.size(); ++i) below = below && lands[i].energy(v) < refs[i];
        if (below) break;
        amp *= 1.25;
    }
    std::vector<ScalarField> dirs{bump};
    for (int k = 0; k < 3; ++k) dirs.push_back(random_bandlimited(s, 3, 17 + k, true));
    auto gs = scan_geometry(lands, u0, dirs, geomspace(0.02, 4.0, 16), std::max(refs[0], refs[1]));
    CCurveSetup setup;
    setup.pc = pc;
    setup.spec = s;
    setup.u0 = u0;
    setup.bump = bump;
    setup.s_endpoint = amp;
    setup.nodes = 33;
    setup.path.dt = 0.3;
    setup.path.tol = 1e-5;
    setup.path.max_iter = 400;
    auto rows = c_curve(setup, lams, refs);
    std::ostringstream os;
    os << "rho " << fmt("%.4f", gs.rho) << (gs.mountain_pass ? "" : " (no annulus)");
    bool found = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].max_node.empty()) continue;
        auto cp = refine_saddle(lands[i], lands[i].field(rows[i].max_node), br.entries[i + 1].u, gs.rho, {});
        bool ok = cp.accepted && cp.grad_max <= kTolGrad && cp.nu.value < 0 && cp.nu.conclusive() &&
                  cp.distance_to_branch > gs.rho / 2;
        double entropy_bound = std::abs(rows[i].c_derivative) * 16 * kPi2 * kPi2 + 3;
        os << "; lambda " << lams[i] << ": E " << fmt("%.6f", cp.energy) << ", grad " << fmt("%.1e", cp.grad_max)
           << ", nu " << fmt("%.3f", cp.nu.value) << ", dist " << fmt("%.3f", cp.distance_to_branch)
           << (ok ? " accepted" : " not accepted") << " [entropy " << fmt("%.1f", cp.volume * 16 * kPi2 * kPi2)
           << " vs |c'|+3 " << fmt("%.1f", entropy_bound) << ", diagnostic]";
        found = found || ok;
    }
    return {found, os.str()};
}

// 9. blow-up fixture round trip
Verdict blowup_round_trip() {
    constexpr double kTolR = 1e-6, kTolProfile = 1e-3, kTolRelation = 1e-12;
    PrescribedCurvature pc;
    double lam = 0.01, r = 0.5;
    pc.lambda = lam;
    GridSpec s(32);
    auto fx = synthetic_blowup(lam, BlowupCase::a, pc, s, r);
    auto peaks = detect_peaks(fx.field, pc);
    bool located = !peaks.empty() && peaks[0].location == fx.center;
    auto res = rescale_case_a(fx.field, lam, peaks.empty() ? fx.center : peaks[0].location);
    double rerr = std::abs(res.r - r) / r, relation = std::abs(res.scale_relation - 0.5);
    bool ok = located && rerr <= kTolR && res.profile_error <= kTolProfile && relation <= kTolRelation;
    return {ok, std::string("peak at implant ") + (located ? "yes" : "NO") + "; r rel err " + fmt("%.2e", rerr) +
                    " (<= 1e-6); profile error " + fmt("%.2e", res.profile_error) + " (<= 1e-3); scale relation err " +
                    fmt("%.1e", relation) + "; r/sqrt(lambda) " + fmt("%.2f", res.ratio_to_sqrt_lambda)};
}

// 10. Cauchy-Schwarz, Parseval, adjointness
Verdict form_identities() {
    constexpr double kTol = 1e-10;
    GridSpec s(8);
    std::array<std::array<double, 4>, 4> ric{};
    for (int i = 0; i < 4; ++i) ric[i][i] = 0.2;
    ric[0][2] = ric[2][0] = 0.05;
    auto curved = PaneitzCoefficients::constant(s, 0.5, ric);
    double cs = -INFINITY, pars = 0, adj = 0;
    for (unsigned long long k = 0; k < 100; ++k) {
        ScalarField u = random_bandlimited(s, 3, 20000 + 2 * k), v = random_bandlimited(s, 3, 20001 + 2 * k);
        for (const PaneitzCoefficients& cc : {PaneitzCoefficients::flat_model(), curved}) {
            double uv = quadratic_form(u, v, cc), uu = quadratic_form(u, u, cc), vv = quadratic_form(v, v, cc);
            cs = std::max(cs, (uv * uv - uu * vv) / (uu * vv));
            double pu_v = inner(apply_paneitz(u, cc), v), u_pv = inner(u, apply_paneitz(v, cc));
            adj = std::max(adj, std::abs(pu_v - u_pv) / std::max(1.0, std::abs(pu_v)));
        }
        double a = inner(u, v), b = spectral_inner(u, v);
        pars = std::max(pars, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
    return {cs <= kTol && pars <= kTol && adj <= kTol,
            "Cauchy-Schwarz excess " + fmt("%.2e", std::max(cs, 0.0)) + ", Parseval " + fmt("%.2e", pars) +
                ", adjointness " + fmt("%.2e", adj) + " (all <= 1e-10) on 100 pairs"};
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    struct Criterion {
        const char* name;
        std::function<Verdict()> fn;
    };
    std::vector<Criterion> criteria{
        {"closed-form quadrature pieces", closed_form_integrals},
        {"bubble identity and volume", bubble_identity},
        {"convex solve", convex_solve},
        {"derivative consistency", derivatives},
        {"branch of relative minimisers", branch},
        {"logarithmic minimax bound", log_bound},
        {"minimax machinery", minimax_machinery},
        {"second solution", second_solution},
        {"blow-up round trip", blowup_round_trip},
        {"form identities", form_identities},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2zu %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, v.detail.c_str(), dt);
        failed += !v.pass;
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
