#pragma once

#include "qcurv/energy.hpp"
#include "qcurv/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qcurv {

struct LineSearchParams {
    double factor = 0.5;
    double sufficient_decrease = 1e-4;
    int max_backtracks = 40;
};

struct SolveOptions {
    double tol_grad = 1e-9;  // max-norm of gradient_field
    int max_newton = 80;
    LineSearchParams linesearch;
    double linear_tol = 1e-10;
    int max_linear = 400;
};

struct NewtonStep {
    int iteration = 0;
    double energy = 0.0;
    double grad_max = 0.0;
    double step = 0.0;
    int linear_iterations = 0;
};

struct SolveResult {
    ScalarField u;
    EnergyBreakdown energy;
    double grad_max = 0.0;
    int iterations = 0;
    std::vector<NewtonStep> trace;
};

// Damped Newton on E_f with Armijo backtracking; throws std::runtime_error
// carrying the iteration trace when the line search or the iteration fails.
SolveResult newton_minimize(const Functional& F, ScalarField init, const SolveOptions& opts);

// Unique minimiser for f <= 0 (rejects f with a positive part).
SolveResult solve_unique_min(const ScalarField& f, double q0, const PaneitzCoefficients& c,
                             const SolveOptions& opts, std::optional<ScalarField> init = std::nullopt);

struct NuEstimate {
    double value = 0.0;        // smallest Ritz value of (P - 8 f e^{4u}, P + 1)
    double lower_bound = 0.0;  // 1 - top eigenvalue of ((8 f e^{4u} + 1)_+, P + 1)
    int negative_directions = 0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    // A sign claim needs a converged Ritz pair or a positive lower bound.
    bool conclusive() const { return converged || lower_bound > 0; }
};

struct EigenOptions {
    int block = 4;
    int max_iter = 150;
    double tol = 1e-6;
    unsigned long long seed = 17;
};

NuEstimate verify_relative_min(const ScalarField& u, const ScalarField& f, const PaneitzCoefficients& c,
                               const EigenOptions& eo = {});

struct BranchEntry {
    double lambda = 0.0;
    ScalarField u;
    EnergyBreakdown energy;
    NuEstimate nu;
    double volume = 0.0;
    double grad_max = 0.0;
    double kp_residual = 0.0;
};

struct Branch {
    std::vector<BranchEntry> entries;
    bool truncated = false;
    double lambda0_empirical = 0.0;  // first failing lambda when truncated
    std::string failure;
};

Branch continue_branch(const PrescribedCurvature& pc, double q0, const std::vector<double>& lambda_grid,
                       GridSpec spec, const SolveOptions& opts, const PaneitzCoefficients& c = {},
                       const EigenOptions& eo = {});

// Writes branch_XXXX.qc4f snapshots and index.csv into dir; returns written paths.
std::vector<std::string> write_branch(const Branch& b, const std::string& dir);

// Flat spectral preconditioner (2|k|^4 + shift)^{-1}.
ScalarField apply_flat_inverse(const ScalarField& r, double quartic_scale, double shift);

}  // namespace qcurv
