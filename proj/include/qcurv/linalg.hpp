#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace qcurv {

using Vec = std::vector<double>;
using LinearMap = std::function<Vec(const Vec&)>;
using InnerProduct = std::function<double(const Vec&, const Vec&)>;

double mean_dot(const Vec& a, const Vec& b);
void axpy(double a, const Vec& x, Vec& y);  // y += a x
Vec scaled(double a, const Vec& x);
Vec sum(const Vec& a, const Vec& b, double cb = 1.0);  // a + cb b

struct KrylovResult {
    Vec x;
    int iterations = 0;
    double rel_residual = 1.0;
    bool converged = false;
    bool negative_curvature = false;
};

// Preconditioned CG; stops early when a direction of nonpositive curvature appears.
KrylovResult pcg(const LinearMap& A, const Vec& b, const LinearMap& Minv, const InnerProduct& dot, double tol,
                 int maxit);

// Preconditioned MINRES for symmetric, possibly indefinite A (Minv must be SPD).
KrylovResult minres(const LinearMap& A, const Vec& b, const LinearMap& Minv, const InnerProduct& dot, double tol,
                    int maxit);

struct EigenEstimate {
    double value = 0.0;          // smallest Ritz value found
    Vec vector;
    std::vector<double> ritz;    // all Ritz values of the final block
    double residual = 0.0;       // relative residual of the smallest pair
    int iterations = 0;
    bool converged = false;
};

// Pencil application: w -> (A w, B w) with B symmetric positive definite.
using PencilMap = std::function<std::pair<Vec, Vec>(const Vec&)>;

// LOBPCG for the smallest eigenvalues of A x = theta B x; T is the preconditioner.
EigenEstimate lobpcg_smallest(const PencilMap& AB, const LinearMap& T, const InnerProduct& dot,
                              std::vector<Vec> start, double tol, int maxit);

}  // namespace qcurv
