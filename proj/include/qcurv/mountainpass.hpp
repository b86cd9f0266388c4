#pragma once

#include "qcurv/energy.hpp"
#include "qcurv/linalg.hpp"
#include "qcurv/minimizer.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qcurv {

// Energy landscape seen by the path and saddle algorithms.  Gradients are
// representatives with respect to dot(); precond(u, .) is an SPD
// approximation of the inverse Hessian at u and precond_apply its inverse.
class Landscape {
public:
    virtual ~Landscape() = default;
    virtual double energy(const Vec& u) const = 0;
    virtual Vec gradient(const Vec& u) const = 0;
    virtual Vec hessian_apply(const Vec& u, const Vec& w) const = 0;
    virtual double dot(const Vec& a, const Vec& b) const = 0;
    virtual double metric_norm2(const Vec& w) const = 0;  // distance used for reparametrisation
    virtual Vec precond(const Vec& u, const Vec& r) const = 0;
    virtual Vec precond_apply(const Vec& u, const Vec& w) const = 0;
    virtual double entropy(const Vec&) const { return 0.0; }
    double grad_max(const Vec& g) const;
};

// E_lambda on the periodic grid; metric norm ||w||^2 = <Pw,w> + mean(w^2).
class GridLandscape : public Landscape {
public:
    explicit GridLandscape(Functional F);
    double energy(const Vec& u) const override;
    Vec gradient(const Vec& u) const override;
    Vec hessian_apply(const Vec& u, const Vec& w) const override;
    double dot(const Vec& a, const Vec& b) const override { return mean_dot(a, b); }
    double metric_norm2(const Vec& w) const override;
    Vec precond(const Vec& u, const Vec& r) const override;
    Vec precond_apply(const Vec& u, const Vec& w) const override;
    double entropy(const Vec& u) const override;
    const Functional& functional() const { return F_; }
    ScalarField field(const Vec& v) const { return ScalarField(F_.f.spec, v); }

private:
    double shift(const Vec& u) const;
    Functional F_;
};

// Two-mode toy E(x,y) = x^2 + 4(y - x^2/4)^2 - x^3/3: minimum at 0,
// saddle (2,1) with value 4/3, E(4,4) = -16/3.
class ToyLandscape : public Landscape {
public:
    double energy(const Vec& u) const override;
    Vec gradient(const Vec& u) const override;
    Vec hessian_apply(const Vec& u, const Vec& w) const override;
    double dot(const Vec& a, const Vec& b) const override { return a[0] * b[0] + a[1] * b[1]; }
    double metric_norm2(const Vec& w) const override { return dot(w, w); }
    Vec precond(const Vec&, const Vec& r) const override { return r; }
    Vec precond_apply(const Vec&, const Vec& w) const override { return w; }
};

struct Path {
    std::vector<Vec> nodes;  // nodes.front() and nodes.back() never move
};

// Linear interpolation u0 -> v with M+1 nodes; throws when E(v) >= reference
// (the branch minimiser energy), asking for a larger endpoint amplitude.
Path initial_path(const Landscape& L, const Vec& u0, const Vec& v, int M, double reference_energy);

struct PathOptions {
    int max_iter = 4000;
    double dt = 0.2;
    double tol = 1e-6;        // max-norm of the perpendicular gradient at the maximiser
    int climb_after = 20;     // iterations before the climbing image is switched on
    bool require_full_gradient = false;  // also demand the full gradient below tol
    double max_step = 0.5;    // node step cap in units of the initial mean segment length
    double energy_slack = 1e-12;
};

struct MinimaxReport {
    double c_est = 0.0;
    int t_star = 0;
    double grad_norm_at_max = 0.0;   // max-norm of the full gradient
    double perp_grad_at_max = 0.0;   // max-norm after removing the tangential part
    double entropy_at_max = 0.0;
    double initial_max = 0.0;
    int iterations = 0;
    int step_halvings = 0;
    bool converged = false;
};

MinimaxReport optimize_path(const Landscape& L, Path& path, const PathOptions& opts);

struct SaddleOptions {
    double tol_grad = 1e-7;
    int max_newton = 60;
    double linear_tol = 1e-8;
    int max_linear = 600;
};

struct SaddleResult {
    Vec x;
    double energy = 0.0;
    double grad_max = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string diagnosis;
};

// Newton on grad E = 0 with MINRES inner solves and a residual-norm line search.
SaddleResult newton_saddle(const Landscape& L, Vec guess, const SaddleOptions& opts);

struct CriticalPoint {
    ScalarField field;
    double energy = 0.0;
    double grad_max = 0.0;
    NuEstimate nu;
    int negative_directions = 0;
    double distance_to_branch = 0.0;
    double volume = 0.0;
    bool accepted = false;
    std::string diagnosis;
};

double h2_distance(const ScalarField& a, const ScalarField& b, const PaneitzCoefficients& c = {});

// Grid saddle refinement with classification; rejected when the result falls
// inside the ball of radius rho/2 around the branch minimiser or Newton fails.
CriticalPoint refine_saddle(const GridLandscape& L, const ScalarField& guess, const ScalarField& branch_min,
                            double rho, const SaddleOptions& opts, const EigenOptions& eo = {});

// Mountain-pass geometry measured by scanning E along rays u0 + r d/||d||.
struct GeometryScan {
    std::vector<double> radii;
    std::vector<double> min_energy;  // over the probed directions
    double rho = 0.0;
    double beta0 = 0.0;
    double reference = 0.0;  // sup over the sampled window of E_mu(u_nu)
    bool mountain_pass = false;
};

GeometryScan scan_geometry(const std::vector<GridLandscape>& landscapes, const ScalarField& u0,
                           const std::vector<ScalarField>& directions, const std::vector<double>& radii,
                           double reference);

struct CCurveRow {
    double lambda = 0.0;
    double c_est = 0.0;
    int t_star = 0;
    double grad_norm = 0.0;
    double entropy_at_max = 0.0;
    double c_derivative = 0.0;  // finite difference, NaN at gaps
    double endpoint_lambda = 0.0;
    bool converged = false;
    std::string flags;
    Vec max_node;  // path node carrying c_est, the saddle guess
};

struct CCurveSetup {
    PrescribedCurvature pc;
    double q0 = -1.0;
    GridSpec spec{16};
    ScalarField u0;         // lambda = 0 minimiser
    ScalarField bump;       // endpoint direction; v = u0 + s bump
    double s_endpoint = 4.0;
    int nodes = 33;
    double K = 0.0;         // logarithmic bound constant
    PathOptions path;
};

// c_lambda over an increasing grid; the endpoint computed at lambda is reused
// for every mu in [lambda, 2 lambda].
std::vector<CCurveRow> c_curve(const CCurveSetup& setup, const std::vector<double>& lambdas,
                               const std::vector<double>& reference_energies);

// Smooth compactly supported bump (1 - (r/R)^2)^3 centred at the origin of the torus.
ScalarField polynomial_bump(GridSpec spec, double radius);

}  // namespace qcurv
