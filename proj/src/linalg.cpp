#include "qcurv/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qcurv {

double mean_dot(const Vec& a, const Vec& b) {
    double s[4] = {0, 0, 0, 0};
    std::size_t n = a.size(), i = 0;
    for (; i + 4 <= n; i += 4)
        for (int k = 0; k < 4; ++k) s[k] += a[i + k] * b[i + k];
    for (; i < n; ++i) s[0] += a[i] * b[i];
    return (s[0] + s[1] + s[2] + s[3]) / double(n);
}

void axpy(double a, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Vec scaled(double a, const Vec& x) {
    Vec y(x);
    for (double& v : y) v *= a;
    return y;
}

Vec sum(const Vec& a, const Vec& b, double cb) {
    Vec y(a);
    axpy(cb, b, y);
    return y;
}

KrylovResult pcg(const LinearMap& A, const Vec& b, const LinearMap& Minv, const InnerProduct& dot, double tol,
                 int maxit) {
    KrylovResult res;
    res.x.assign(b.size(), 0.0);
    double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0) {
        res.converged = true;
        res.rel_residual = 0;
        return res;
    }
    Vec r = b, z = Minv(r), p = z;
    double rz = dot(r, z);
    for (int it = 0; it < maxit; ++it) {
        Vec Ap = A(p);
        double pAp = dot(p, Ap);
        if (pAp <= 0) {
            res.negative_curvature = true;
            if (it == 0) res.x = z;  // fall back to the preconditioned residual
            res.iterations = it;
            return res;
        }
        double alpha = rz / pAp;
        axpy(alpha, p, res.x);
        axpy(-alpha, Ap, r);
        res.iterations = it + 1;
        res.rel_residual = std::sqrt(dot(r, r)) / bnorm;
        if (res.rel_residual <= tol) {
            res.converged = true;
            return res;
        }
        z = Minv(r);
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    return res;
}

KrylovResult minres(const LinearMap& A, const Vec& b, const LinearMap& Minv, const InnerProduct& dot, double tol,
                    int maxit) {
    KrylovResult res;
    std::size_t n = b.size();
    res.x.assign(n, 0.0);
    Vec r1 = b, y = Minv(r1);
    double beta1 = dot(r1, y);
    if (beta1 < 0) throw std::invalid_argument("minres: preconditioner is not positive definite");
    beta1 = std::sqrt(beta1);
    if (beta1 == 0) {
        res.converged = true;
        res.rel_residual = 0;
        return res;
    }
    double oldb = 0, beta = beta1, dbar = 0, epsln = 0, phibar = beta1, cs = -1, sn = 0;
    Vec w(n, 0.0), w2(n, 0.0), r2 = r1, v(n);
    const double eps = std::numeric_limits<double>::epsilon();
    for (int it = 1; it <= maxit; ++it) {
        double s = 1.0 / beta;
        for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
        y = A(v);
        if (it >= 2) axpy(-beta / oldb, r1, y);
        double alfa = dot(v, y);
        axpy(-alfa / beta, r2, y);
        r1 = r2;
        r2 = y;
        y = Minv(r2);
        oldb = beta;
        beta = dot(r2, y);
        if (beta < 0) throw std::invalid_argument("minres: preconditioner is not positive definite");
        beta = std::sqrt(beta);
        double oldeps = epsln;
        double delta = cs * dbar + sn * alfa;
        double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        double gamma = std::max(std::hypot(gbar, beta), eps);
        cs = gbar / gamma;
        sn = beta / gamma;
        double phi = cs * phibar;
        phibar = sn * phibar;
        Vec w1 = w2;
        w2 = w;
        for (std::size_t i = 0; i < n; ++i) w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        axpy(phi, w, res.x);
        res.iterations = it;
        res.rel_residual = phibar / beta1;
        if (res.rel_residual <= tol || beta == 0) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Symmetric Gram matrix <a_i, b_j>; only the upper triangle is evaluated.
MatrixXd gram(const std::vector<Vec>& a, const std::vector<Vec>& b, const InnerProduct& dot) {
    MatrixXd g(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i; j < b.size(); ++j) g(i, j) = g(j, i) = dot(a[i], b[j]);
    return g;
}

std::vector<Vec> combine(const std::vector<Vec>& basis, const MatrixXd& c, int col0, int ncols) {
    std::vector<Vec> out(ncols, Vec(basis[0].size(), 0.0));
    for (int j = 0; j < ncols; ++j)
        for (std::size_t k = 0; k < basis.size(); ++k) {
            double a = c(k, col0 + j);
            if (a != 0) axpy(a, basis[k], out[j]);
        }
    return out;
}

}  // namespace

EigenEstimate lobpcg_smallest(const PencilMap& AB, const LinearMap& T, const InnerProduct& dot,
                              std::vector<Vec> start, double tol, int maxit) {
    const int m = int(start.size());
    if (m < 1) throw std::invalid_argument("lobpcg: empty start block");
    std::vector<Vec> X = std::move(start), AX(m), BX(m), P, AP, BP;
    for (int j = 0; j < m; ++j) std::tie(AX[j], BX[j]) = AB(X[j]);

    EigenEstimate est;
    VectorXd theta;
    for (int it = 0; it <= maxit; ++it) {
        // Rayleigh-Ritz on span[X, W, P] with a B-orthonormalised basis
        std::vector<Vec> S = X, AS = AX, BS = BX;
        if (it > 0) {
            std::vector<Vec> R(m), W(m), AW(m), BW(m);
            double worst = 0;
            for (int j = 0; j < m; ++j) {
                R[j] = sum(AX[j], BX[j], -theta(j));
                double scale = std::sqrt(dot(AX[j], AX[j])) + std::abs(theta(j)) * std::sqrt(dot(BX[j], BX[j]));
                double rel = std::sqrt(dot(R[j], R[j])) / std::max(scale, 1e-300);
                if (j == 0) est.residual = rel;
                worst = std::max(worst, rel);
            }
            est.iterations = it;
            if (est.residual <= tol) {
                est.converged = true;
                break;
            }
            if (it == maxit) break;
            for (int j = 0; j < m; ++j) {
                W[j] = T(R[j]);
                std::tie(AW[j], BW[j]) = AB(W[j]);
            }
            S.insert(S.end(), W.begin(), W.end());
            AS.insert(AS.end(), AW.begin(), AW.end());
            BS.insert(BS.end(), BW.begin(), BW.end());
            S.insert(S.end(), P.begin(), P.end());
            AS.insert(AS.end(), AP.begin(), AP.end());
            BS.insert(BS.end(), BP.begin(), BP.end());
        }
        MatrixXd GA = gram(S, AS, dot), GB = gram(S, BS, dot);
        Eigen::SelfAdjointEigenSolver<MatrixXd> eb(GB);
        double bmax = eb.eigenvalues().maxCoeff();
        std::vector<int> keep;
        for (int i = 0; i < eb.eigenvalues().size(); ++i)
            if (eb.eigenvalues()(i) > 1e-13 * bmax) keep.push_back(i);
        MatrixXd Z(S.size(), keep.size());
        for (std::size_t c = 0; c < keep.size(); ++c)
            Z.col(c) = eb.eigenvectors().col(keep[c]) / std::sqrt(eb.eigenvalues()(keep[c]));
        Eigen::SelfAdjointEigenSolver<MatrixXd> ea(Z.transpose() * GA * Z);
        int mm = std::min<int>(m, int(keep.size()));
        MatrixXd C = Z * ea.eigenvectors();
        theta = ea.eigenvalues().head(mm);
        std::vector<Vec> Xn = combine(S, C, 0, mm), AXn = combine(AS, C, 0, mm), BXn = combine(BS, C, 0, mm);
        if (it > 0) {
            // search direction: the non-X part of the new iterates
            MatrixXd Cp = C.leftCols(mm);
            Cp.topRows(m).setZero();
            P = combine(S, Cp, 0, mm);
            AP = combine(AS, Cp, 0, mm);
            BP = combine(BS, Cp, 0, mm);
        }
        X = std::move(Xn);
        AX = std::move(AXn);
        BX = std::move(BXn);
        est.value = theta(0);
        est.vector = X[0];
        est.ritz.assign(theta.data(), theta.data() + theta.size());
        if (mm < m) {
            // basis collapsed; refill the block deterministically from the residual directions
            while (int(X.size()) < m) {
                Vec v = T(AX[0]);
                X.push_back(v);
                auto ab = AB(v);
                AX.push_back(ab.first);
                BX.push_back(ab.second);
            }
            VectorXd t2(m);
            t2.head(mm) = theta;
            for (int j = mm; j < m; ++j) t2(j) = dot(X[j], AX[j]) / dot(X[j], BX[j]);
            theta = t2;
            P.clear();
            AP.clear();
            BP.clear();
        }
    }
    return est;
}

}  // namespace qcurv
