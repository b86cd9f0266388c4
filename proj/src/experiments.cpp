#include "qcurv/experiments.hpp"

#include "qcurv/blowup.hpp"
#include "qcurv/comparison.hpp"
#include "qcurv/minimizer.hpp"
#include "qcurv/mountainpass.hpp"
#include "qcurv/radial.hpp"
#include "qcurv/snapshot.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>
#include <openssl/evp.h>
#include <openssl/crypto.h>

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace qcurv {

namespace fs = std::filesystem;

namespace {

constexpr double kGeometric = 16.0 * kPi * kPi * kPi * kPi;

class Timer {
public:
    Timer(RunOutcome& o, std::string name) : o_(o), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
    ~Timer() {
        o_.timings[name_] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    RunOutcome& o_;
    std::string name_;
    std::chrono::steady_clock::time_point t0_;
};

std::string path_in(const RunRequest& req, const std::string& name) { return (fs::path(req.config.out) / name).string(); }

std::ofstream open_csv(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << std::setprecision(17);
    return os;
}

SolveResult solve_base(const ExperimentConfig& cfg, GridSpec spec) {
    return solve_unique_min(cfg.f_field(0.0, spec), cfg.q0, {}, cfg.solve);
}

// ---- solve-min ----
int run_solve_min(const RunRequest& req, RunOutcome& out, std::ostream& log) {
    const auto& cfg = req.config;
    GridSpec spec(cfg.grid_n);
    ScalarField f = cfg.f_field(0.0, spec);
    SolveResult r;
    {
        Timer t(out, "solve");
        r = solve_unique_min(f, cfg.q0, {}, cfg.solve);
    }
    NuEstimate nu;
    {
        Timer t(out, "nu");
        nu = verify_relative_min(r.u, f, {}, cfg.eigen);
    }
    std::string snap = path_in(req, "solution.qc4f");
    write_snapshot(snap, r.u, 0.0);
    out.files.push_back(snap);
    std::string trace = path_in(req, "solve_trace.csv");
    {
        auto os = open_csv(trace);
        os << "iteration,energy,grad_max,step,linear_iterations\n";
        for (const auto& s : r.trace)
            os << s.iteration << ',' << s.energy << ',' << s.grad_max << ',' << s.step << ',' << s.linear_iterations
               << '\n';
    }
    out.files.push_back(trace);
    FAverage fa = f_average(r.u, f);
    std::string summary = path_in(req, "solve_summary.csv");
    {
        auto os = open_csv(summary);
        os << "energy,quadratic,linear,exponential,grad_max,kp_residual,volume,ubar,jensen_gap,nu,nu_lower,max_abs_u\n";
        os << r.energy.total << ',' << r.energy.quadratic << ',' << r.energy.linear << ',' << r.energy.exponential
           << ',' << r.grad_max << ',' << kp_residual(r.u, f, cfg.q0) << ',' << volume(r.u) << ',' << fa.ubar << ','
           << fa.jensen_gap << ',' << nu.value << ',' << nu.lower_bound << ',' << max_abs(r.u) << '\n';
    }
    out.files.push_back(summary);
    log << "solve-min: energy " << r.energy.total << ", grad max " << r.grad_max << ", iterations " << r.iterations
        << ", nu " << nu.value << " (lower bound " << nu.lower_bound << "), max|u| " << max_abs(r.u) << "\n";
    return 0;
}

// ---- continue-branch ----
int run_branch(const RunRequest& req, RunOutcome& out, std::ostream& log) {
    const auto& cfg = req.config;
    if (cfg.family != "builtin") throw ConfigError({"continue-branch needs model.family = builtin"});
    Branch b;
    {
        Timer t(out, "branch");
        b = continue_branch(cfg.curvature(), cfg.q0, cfg.branch_lambdas, GridSpec(cfg.grid_n), cfg.solve, {},
                            cfg.eigen);
    }
    auto files = write_branch(b, path_in(req, "branch"));
    out.files.insert(out.files.end(), files.begin(), files.end());
    log << "continue-branch: " << b.entries.size() << " entries up to lambda " << b.entries.back().lambda;
    if (b.truncated) log << ", truncated at " << b.lambda0_empirical << " (" << b.failure << ")";
    log << "\n";
    for (const auto& e : b.entries)
        log << "  lambda " << e.lambda << "  energy " << e.energy.total << "  nu " << e.nu.value << "  volume "
            << e.volume << "\n";
    return 0;
}

// ---- appendix-oracle ----
int run_appendix(const RunRequest& req, RunOutcome& out, std::ostream& log) {
    const auto& cfg = req.config;
    CutoffParams p = CutoffParams::make(cfg.A0);
    std::vector<AppendixIntegrals> rows(cfg.appendix_lambdas.size());
    {
        Timer t(out, "appendix");
        parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
            rows[i] = appendix_integrals(cfg.appendix_lambdas[i], p, cfg.appendix_N, cfg.remainder_amplitude);
        });
    }
    std::string path = path_in(req, "appendix.csv");
    write_appendix_csv(path, rows);
    out.files.push_back(path);
    log << std::setprecision(12);
    log << "appendix-oracle: A0 = " << p.A0 << ", ||xi''|| = " << p.xi_second_sup << ", N = " << cfg.appendix_N << "\n";
    std::vector<double> ls, m3;
    for (const auto& a : rows) {
        log << "  lambda " << a.lambda << "  II " << a.II << "  closed form " << a.II_closed << "  rel err "
            << std::abs(a.II - a.II_closed) / std::abs(a.II_closed) << "  III " << a.III << "  M1 " << a.M1
            << " <= " << a.M1_bound << "\n";
        ls.push_back(a.lambda);
        m3.push_back(a.M3);
    }
    if (rows.size() >= 2) log << "  M3 log-log slope " << loglog_slope(ls, m3) << " (N-3 = " << cfg.appendix_N - 3 << ")\n";
    return 0;
}

// ---- comparison-scan ----
int run_comparison(const RunRequest& req, RunOutcome& out, std::ostream& log) {
    const auto& cfg = req.config;
    if (cfg.family != "builtin") throw ConfigError({"comparison-scan needs model.family = builtin"});
    GridSpec spec(cfg.grid_n);
    CutoffParams p = CutoffParams::make(cfg.A0);
    SolveResult base;
    {
        Timer t(out, "solve");
        base = solve_base(cfg, spec);
    }
    double L = choose_L(cfg.curvature(), cfg.lambda0);
    const auto& lams = cfg.comparison_lambdas;
    std::vector<AppendixIntegrals> integrals(lams.size());
    std::vector<TestFunctionReport> reports(lams.size());
    std::vector<std::string> grid_notes(lams.size());
    RayOptions ro;
    ro.K = cfg.K;
    {
        Timer t(out, "rays");
        parallel_for(lams.size(), cfg.jobs, [&](std::size_t i) {
            integrals[i] = appendix_integrals(lams[i], p, cfg.appendix_N, cfg.remainder_amplitude);
            reports[i] = ray_energy_radial(base.u, cfg.curvature(lams[i]), cfg.q0, L, p, ro);
            try {
                TestFunctionReport g = ray_energy_grid(base.u, cfg.curvature(lams[i]), cfg.q0, L, p, ro);
                std::ostringstream os;
                os << "grid c_upper " << g.c_upper << " s_star " << g.s_star;
                grid_notes[i] = os.str();
            } catch (const std::domain_error& e) {
                grid_notes[i] = e.what();
            }
        });
    }
    std::string sweep = path_in(req, "comparison.csv");
    write_sweep_csv(sweep, integrals, reports);
    out.files.push_back(sweep);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::ostringstream name;
        name << "ray_" << std::setw(3) << std::setfill('0') << i << ".csv";
        std::string path = path_in(req, name.str());
        auto os = open_csv(path);
        os << "s,energy\n";
        for (std::size_t k = 0; k < reports[i].s_values.size(); ++k)
            os << reports[i].s_values[k] << ',' << reports[i].energies[k] << '\n';
        out.files.push_back(path);
    }
    std::string detail = path_in(req, "comparison_detail.csv");
    {
        auto os = open_csv(detail);
        os << "lambda,L,energy_at_zero,paneitz_form,paneitz_form_geometric,m1_bound,s_star,c_upper,"
              "increment_geometric,K_log,bound_normalised,bound_geometric,c_N,cbar_gap\n";
        for (const auto& r : reports)
            os << r.lambda << ',' << r.L << ',' << r.energy_at_zero << ',' << r.paneitz_form << ','
               << r.paneitz_form_geometric << ',' << r.m1_bound << ',' << r.s_star << ',' << r.c_upper << ','
               << r.increment_geometric << ',' << r.K * std::log(1.0 / r.lambda) << ',' << r.bound_normalised << ','
               << r.bound_geometric << ',' << r.c_N << ',' << r.cbar_gap << '\n';
    }
    out.files.push_back(detail);
    log << "comparison-scan: L = " << L << ", E(u0) = " << base.energy.total << "\n";
    int status = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        log << "  lambda " << r.lambda << "  s_star " << r.s_star << "  c_upper " << r.c_upper << "  increment "
            << r.increment_geometric << " <= " << r.K * std::log(1.0 / r.lambda) << (r.bound_geometric ? "" : "  VIOLATED")
            << "  M1 " << integrals[i].M1 << " <= " << r.m1_bound << "  [" << grid_notes[i] << "]\n";
        if (!r.bound_geometric) status = 3;
    }
    return status;
}

// ---- mountain-pass ----
int run_mountain(const RunRequest& req, RunOutcome& out, std::ostream& log) {
    const auto& cfg = req.config;
    if (cfg.family != "builtin") throw ConfigError({"mountain-pass needs model.family = builtin"});
    GridSpec spec(cfg.grid_n);
    PrescribedCurvature pc = cfg.curvature();
    Branch b;
    {
        Timer t(out, "branch");
        b = continue_branch(pc, cfg.q0, cfg.ccurve_lambdas, spec, cfg.solve, {}, cfg.eigen);
    }
    const ScalarField& u0 = b.entries.front().u;
    std::vector<double> lams, refs;
    std::vector<const BranchEntry*> mins;
    for (std::size_t i = 1; i < b.entries.size(); ++i) {
        lams.push_back(b.entries[i].lambda);
        refs.push_back(b.entries[i].energy.total);
        mins.push_back(&b.entries[i]);
    }
    if (lams.empty()) {
        log << "mountain-pass: the branch has no entry in the requested window (" << b.failure << ")\n";
        return 3;
    }
    std::vector<GridLandscape> lands;
    for (double l : lams) {
        PrescribedCurvature q = pc;
        q.lambda = l;
        lands.emplace_back(Functional{f_lambda_field(q, spec), cfg.q0, {}});
    }
    ScalarField bump = polynomial_bump(spec, cfg.mp_bump_radius);
    // one endpoint amplitude below every branch minimiser
    double s = 1.0;
    for (int k = 0;; ++k) {
        Vec v = u0.values;
        axpy(s, bump.values, v);
        bool below = true;
        for (std::size_t i = 0; i < lands.size(); ++i) below = below && lands[i].energy(v) < refs[i];
        if (below) break;
        if (k > 60) throw std::runtime_error("mountain-pass: no endpoint amplitude below the branch minimisers");
        s *= 1.25;
    }
    GeometryScan gs;
    {
        Timer t(out, "geometry");
        std::vector<ScalarField> dirs{bump};
        for (int k = 0; k < 3; ++k) dirs.push_back(random_bandlimited(spec, 3, cfg.seed + k, true));
        gs = scan_geometry(lands, u0, dirs, geomspace(0.02, 4.0, 16), *std::max_element(refs.begin(), refs.end()));
    }
    std::string geo = path_in(req, "geometry.csv");
    {
        auto os = open_csv(geo);
        os << "radius,min_energy\n";
        for (std::size_t i = 0; i < gs.radii.size(); ++i) os << gs.radii[i] << ',' << gs.min_energy[i] << '\n';
    }
    out.files.push_back(geo);
    log << "mountain-pass: endpoint amplitude " << s << ", rho " << gs.rho << ", beta0 " << gs.beta0
        << ", reference " << gs.reference << (gs.mountain_pass ? "" : " (annulus not above the minimisers)") << "\n";

    CCurveSetup setup;
    setup.pc = pc;
    setup.q0 = cfg.q0;
    setup.spec = spec;
    setup.u0 = u0;
    setup.bump = bump;
    setup.s_endpoint = s;
    setup.nodes = cfg.mp_nodes;
    setup.K = cfg.K / kGeometric;
    setup.path.dt = cfg.mp_dt;
    setup.path.tol = cfg.mp_tol;
    setup.path.max_iter = cfg.mp_max_iter;
    std::vector<CCurveRow> rows;
    {
        Timer t(out, "c_curve");
        rows = c_curve(setup, lams, refs);
    }
    std::string cc = path_in(req, "ccurve.csv");
    {
        auto os = open_csv(cc);
        os << "lambda,c_est,t_star,grad_norm,entropy_at_max,c_fd_derivative,endpoint_lambda,converged,flags\n";
        for (const auto& r : rows)
            os << r.lambda << ',' << r.c_est << ',' << r.t_star << ',' << r.grad_norm << ',' << r.entropy_at_max << ','
               << r.c_derivative << ',' << r.endpoint_lambda << ',' << r.converged << ",\"" << r.flags << "\"\n";
    }
    out.files.push_back(cc);

    std::string sad = path_in(req, "saddle.csv");
    auto os = open_csv(sad);
    os << "lambda,accepted,energy,grad_max,nu,nu_lower,nu_conclusive,negative_directions,distance_to_branch,rho,"
          "volume,volume_geometric,entropy_bound_geometric,diagnosis\n";
    int accepted = 0;
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_partition(order.begin(), order.end(), [&](std::size_t i) { return rows[i].converged; });
    for (std::size_t i : order) {
        const auto& r = rows[i];
        if (r.max_node.empty()) continue;
        SaddleOptions so;
        so.tol_grad = cfg.saddle_tol;
        CriticalPoint cp;
        {
            Timer t(out, "saddle");
            cp = refine_saddle(lands[i], lands[i].field(r.max_node), mins[i]->u, gs.rho, so, cfg.eigen);
        }
        double bound = std::isfinite(r.c_derivative) ? std::abs(r.c_derivative) * kGeometric + 3.0 : NAN;
        os << r.lambda << ',' << cp.accepted << ',' << cp.energy << ',' << cp.grad_max << ',' << cp.nu.value << ','
           << cp.nu.lower_bound << ',' << cp.nu.conclusive() << ',' << cp.negative_directions << ','
           << cp.distance_to_branch << ',' << gs.rho << ',' << cp.volume << ',' << cp.volume * kGeometric << ','
           << bound << ",\"" << cp.diagnosis << "\"\n";
        log << "  lambda " << r.lambda << "  c_est " << r.c_est << (r.converged ? "" : " (path not converged)")
            << "  saddle: " << cp.diagnosis << ", grad " << cp.grad_max << ", nu " << cp.nu.value << ", distance "
            << cp.distance_to_branch << "\n";
        if (cp.accepted && cp.nu.value < 0) {
            std::ostringstream name;
            name << "saddle_" << std::setw(3) << std::setfill('0') << i << ".qc4f";
            std::string snap = path_in(req, name.str());
            write_snapshot(snap, cp.field, r.lambda);
            out.files.push_back(snap);
            ++accepted;
        }
    }
    out.files.push_back(sad);
    return accepted > 0 ? 0 : 3;
}

// ---- blowup-analyze ----
std::vector<std::string> collect_snapshots(const std::vector<std::string>& inputs) {
    std::vector<std::string> files;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<std::string> found;
            for (const auto& e : fs::directory_iterator(in))
                if (e.path().extension() == ".qc4f") found.push_back(e.path().string());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(in);
        }
    }
    return files;
}

int run_blowup(const RunRequest& req, RunOutcome& out, std::ostream& log) {
    const auto& cfg = req.config;
    PrescribedCurvature pc = cfg.curvature();
    std::vector<PeakReport> rows;
    if (req.inputs.empty()) {
        PrescribedCurvature q = cfg.curvature(cfg.blowup_fixture_lambda);
        GridSpec spec(cfg.blowup_fixture_n);
        SyntheticBlowup sb = synthetic_blowup(q.lambda, BlowupCase::a, q, spec, cfg.blowup_fixture_r);
        std::string snap = path_in(req, "fixture.qc4f");
        write_snapshot(snap, sb.field, q.lambda);
        out.files.push_back(snap);
        auto peaks = detect_peaks(sb.field, q, cfg.blowup.peak_threshold);
        RescaleA ra = rescale_case_a(sb.field, q.lambda, peaks.front().location);
        std::string prof = path_in(req, "profile_case_a.csv");
        write_profile_csv(prof, ra.profile);
        out.files.push_back(prof);
        log << "blowup-analyze (synthetic fixture): implanted r " << sb.r << ", recovered r " << ra.r
            << ", profile error " << ra.profile_error << ", r/sqrt(lambda) " << ra.ratio_to_sqrt_lambda << "\n";
        RegionCheck rc = ellipsoid_check(q, spec);
        log << "  ellipsoid check: " << rc.in_K << " grid points in K, " << rc.theta2_outside_K
            << " inner-ellipsoid points outside K, " << rc.K_outside_theta1 << " K points outside the outer ellipsoid\n";
        rows = analyze_blowup(sb.field, q, cfg.blowup);
    } else {
        std::vector<std::string> files = collect_snapshots(req.inputs);
        std::vector<std::vector<PeakReport>> per(files.size());
        std::vector<double> lambdas(files.size());
        parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
            Snapshot s = read_snapshot(files[i]);
            PrescribedCurvature q = pc;
            q.lambda = lambdas[i] = s.lambda;
            per[i] = analyze_blowup(s.field, q, cfg.blowup);
        });
        // merged in input order so the output does not depend on scheduling
        for (std::size_t i = 0; i < files.size(); ++i) {
            log << "blowup-analyze: " << files[i] << " lambda " << lambdas[i] << ", " << per[i].size() << " peaks\n";
            rows.insert(rows.end(), per[i].begin(), per[i].end());
        }
    }
    for (const auto& r : rows)
        log << "  peak u = " << r.peak.value << "  case " << r.case_tag << "  r " << r.r << "  mass " << r.mass.mass_abs
            << "  weight " << r.mass.weight << "  " << r.diagnosis << "\n";
    std::string peaks = path_in(req, "peaks.csv");
    write_peaks_csv(peaks, rows);
    out.files.push_back(peaks);
    return 0;
}

// ---- selftest ----
struct Check {
    std::string name;
    double value;
    double tolerance;
    bool pass;
};

int run_selftest(const RunRequest& req, RunOutcome& out, std::ostream& log) {
    const auto& cfg = req.config;
    GridSpec spec(16);
    std::vector<Check> checks;
    auto add = [&](std::string name, double value, double tol, bool pass) {
        checks.push_back({std::move(name), value, tol, pass});
    };
    {
        Timer t(out, "spectral");
        double parseval = 0, cs = 0, adjoint = 0;
        for (int k = 0; k < 20; ++k) {
            ScalarField u = random_bandlimited(spec, 6, cfg.seed + 2 * k), v = random_bandlimited(spec, 6, cfg.seed + 2 * k + 1);
            parseval = std::max(parseval, std::abs(spectral_inner(u, v) - inner(u, v)));
            double puv = quadratic_form(u, v, {}), puu = quadratic_form(u, u, {}), pvv = quadratic_form(v, v, {});
            cs = std::max(cs, std::abs(puv) - std::sqrt(puu * pvv));
            adjoint = std::max(adjoint, std::abs(inner(bilaplacian(u), v) - inner(u, bilaplacian(v))) /
                                            std::max(1.0, std::abs(inner(bilaplacian(u), v))));
        }
        add("parseval identity", parseval, 1e-10, parseval <= 1e-10);
        add("P-form Cauchy-Schwarz excess", cs, 1e-10, cs <= 1e-10);
        add("bilaplacian adjointness", adjoint, 1e-10, adjoint <= 1e-10);
    }
    {
        Timer t(out, "bubble");
        std::vector<double> rs;
        for (int i = 0; i <= 10000; ++i) rs.push_back(0.1 * i);
        double res = bubble_residual(rs);
        add("bubble residual on [0,1000]", res, 1e-10, res <= 1e-10);
        double vol = std::abs(bubble_volume().total / (16.0 * kPi * kPi) - 1.0);
        add("bubble volume vs 16 pi^2", vol, 1e-8, vol <= 1e-8);
    }
    {
        Timer t(out, "appendix");
        auto a = appendix_integrals(std::exp(-10.0), CutoffParams::make(cfg.A0), 5);
        double rel = std::abs(a.II - a.II_closed) / a.II_closed;
        add("appendix II closed form at e^-10", rel, 1e-8, rel <= 1e-8);
    }
    {
        Timer t(out, "solve");
        // manufactured: f chosen so that a known u* solves the equation
        ScalarField ustar = sample([](const Point4& x) { return 0.1 * std::cos(x[0]) * std::sin(x[1]) + 0.05 * std::cos(x[2] + x[3]); }, spec);
        double q0 = -1.0;
        ScalarField pu = bilaplacian(ustar);
        ScalarField e = exp4(ustar);
        ScalarField f(spec);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = (pu[i] + 2.0 * q0) / (2.0 * e[i]);
        SolveOptions so = cfg.solve;
        so.tol_grad = 1e-11;
        SolveResult r = solve_unique_min(f, q0, {}, so);
        double err = max_abs(r.u - ustar);
        add("manufactured solution max error", err, 1e-8, err <= 1e-8);
        double kp = std::abs(kp_residual(r.u, f, q0));
        add("kp residual", kp, 1e-8, kp <= 1e-8);
    }
    {
        Timer t(out, "derivatives");
        PrescribedCurvature pc = cfg.curvature(0.1);
        ScalarField f = f_lambda_field(pc, spec);
        ScalarField u = random_bandlimited(spec, 3, cfg.seed + 99);
        u *= 0.2;
        ScalarField g = gradient_field(u, f, cfg.q0);
        double worst = 0;
        for (int k = 0; k < 5; ++k) {
            ScalarField d = random_bandlimited(spec, 3, cfg.seed + 200 + k);
            double h = 1e-5;
            ScalarField up = u, um = u;
            up.axpy(h, d);
            um.axpy(-h, d);
            double fd = (energy(up, f, cfg.q0).total - energy(um, f, cfg.q0).total) / (2 * h);
            double an = inner(g, d);
            worst = std::max(worst, std::abs(fd - an) / std::max(1e-12, std::abs(an)));
        }
        add("gradient vs central differences", worst, 1e-6, worst <= 1e-6);
        double mono = -INFINITY;
        for (int k = 0; k < 10; ++k) {
            ScalarField v = random_bandlimited(spec, 4, cfg.seed + 300 + k);
            PrescribedCurvature a = cfg.curvature(0.2), b = cfg.curvature(0.1);
            mono = std::max(mono, energy(v, f_lambda_field(a, spec), cfg.q0).total -
                                      energy(v, f_lambda_field(b, spec), cfg.q0).total);
        }
        add("E_mu1 - E_mu2 for mu1 > mu2 (max)", mono, 0.0, mono <= 0.0);
    }
    {
        Timer t(out, "toy");
        ToyLandscape toy;
        Path p = initial_path(toy, {0.0, 0.0}, {4.0, 4.0}, 32, 0.0);
        PathOptions po;
        po.tol = 1e-9;
        MinimaxReport rep = optimize_path(toy, p, po);
        SaddleResult sr = newton_saddle(toy, p.nodes[rep.t_star], {});
        double err = std::abs(sr.energy - 4.0 / 3.0);
        add("toy saddle value vs 4/3", err, 1e-6, err <= 1e-6 && std::abs(rep.c_est - 4.0 / 3.0) <= 1e-6);
    }
    {
        Timer t(out, "blowup");
        PrescribedCurvature q = cfg.curvature(0.01);
        GridSpec big(32);
        SyntheticBlowup sb = synthetic_blowup(q.lambda, BlowupCase::a, q, big, 0.5);
        auto peaks = detect_peaks(sb.field, q);
        RescaleA ra = rescale_case_a(sb.field, q.lambda, peaks.front().location);
        double rerr = std::abs(ra.r - sb.r) / sb.r;
        add("fixture peak at the implant (index)", double(peaks.front().index), 0.0, peaks.front().index == 0);
        add("fixture scale recovery", rerr, 1e-6, rerr <= 1e-6);
        add("fixture profile error on |y| <= 2", ra.profile_error, 1e-3, ra.profile_error <= 1e-3);
    }
    std::string path = path_in(req, "selftest.csv");
    {
        auto os = open_csv(path);
        os << "check,value,tolerance,pass\n";
        for (const auto& c : checks) os << '"' << c.name << "\"," << c.value << ',' << c.tolerance << ',' << c.pass << '\n';
    }
    out.files.push_back(path);
    bool all = true;
    log << std::left << std::setw(40) << "invariant" << std::setw(14) << "value" << std::setw(12) << "tolerance"
        << "result\n";
    for (const auto& c : checks) {
        std::ostringstream v, t;
        v << std::setprecision(3) << std::scientific << c.value;
        t << std::setprecision(1) << std::scientific << c.tolerance;
        log << std::setw(40) << c.name << std::setw(14) << v.str() << std::setw(12) << t.str()
            << (c.pass ? "pass" : "FAIL") << "\n";
        all = all && c.pass;
    }
    return all ? 0 : 3;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names{"solve-min",       "continue-branch", "comparison-scan", "mountain-pass",
                                                "blowup-analyze", "appendix-oracle", "selftest"};
    return names;
}

RunOutcome run(const RunRequest& req, std::ostream& log) {
    req.config.validate();
    fs::create_directories(req.config.out);
    RunOutcome out;
    auto t0 = std::chrono::steady_clock::now();
    const std::string& s = req.subcommand;
    if (s == "solve-min")
        out.status = run_solve_min(req, out, log);
    else if (s == "continue-branch")
        out.status = run_branch(req, out, log);
    else if (s == "comparison-scan")
        out.status = run_comparison(req, out, log);
    else if (s == "mountain-pass")
        out.status = run_mountain(req, out, log);
    else if (s == "blowup-analyze")
        out.status = run_blowup(req, out, log);
    else if (s == "appendix-oracle")
        out.status = run_appendix(req, out, log);
    else if (s == "selftest")
        out.status = run_selftest(req, out, log);
    else
        throw ConfigError({"unknown subcommand " + s});
    out.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(req.config.out, req, out);
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256: digest initialisation failed");
    }
    std::vector<char> buf(1 << 16);
    while (is) {
        is.read(buf.data(), std::streamsize(buf.size()));
        if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), std::size_t(is.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

void write_manifest(const std::string& dir, const RunRequest& req, const RunOutcome& outcome) {
    using nlohmann::json;
    json m;
    m["subcommand"] = req.subcommand;
    m["status"] = outcome.status;
    m["config"] = parse_key_values(req.config.echo());
    m["inputs"] = req.inputs;
    m["versions"] = {
        {"qcurv", "1.0.0"},
        {"fftw", std::string(fftw_version)},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", std::string(BOOST_LIB_VERSION)},
        {"openssl", std::string(OpenSSL_version(OPENSSL_VERSION))},
        {"compiler", std::string(__VERSION__)},
    };
    m["timings_seconds"] = outcome.timings;
    std::vector<std::string> files = outcome.files;
    std::sort(files.begin(), files.end());
    json list = json::array();
    for (const auto& f : files)
        list.push_back({{"path", fs::relative(f, dir).string()}, {"sha256", sha256_file(f)}, {"bytes", fs::file_size(f)}});
    m["files"] = list;
    std::ofstream os(fs::path(dir) / "manifest.json");
    if (!os) throw std::runtime_error("cannot write manifest in " + dir);
    os << m.dump(2) << "\n";
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex m;
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(jobs, int(count)); ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < count;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(m);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace qcurv
