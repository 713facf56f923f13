#include "tissuescale/solve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ts {

namespace {

Vector jacobi_diagonal(const SpMat& A) {
    Vector d = A.diagonal().cwiseAbs();
    for (int i = 0; i < d.size(); ++i)
        if (d[i] == 0.0) d[i] = 1.0;
    return d;
}

} // namespace

SolveReport pcg(const SpMat& A, const Vector& b, Vector& x, const SolveOptions& opt) {
    SolveReport rep;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero();
        rep.converged = true;
        return rep;
    }
    if (x.size() != b.size()) x = Vector::Zero(b.size());
    Vector dinv = jacobi_diagonal(A).cwiseInverse();
    Vector r = b - A * x;
    Vector z = dinv.cwiseProduct(r);
    Vector p = z;
    double rz = r.dot(z);
    // minimal-residual smoothing: the reported iterate has a monotone
    // nonincreasing residual while the underlying CG recurrence is untouched
    Vector xs = x, rs = r;
    for (int it = 0; it < opt.max_iter; ++it) {
        double rel = rs.norm() / bnorm;
        if (opt.want_trace) rep.trace.push_back(rel);
        if (rel <= opt.tol) {
            rep.converged = true;
            rep.iterations = it;
            rep.rel_residual = rel;
            x = xs;
            return rep;
        }
        Vector Ap = A * p;
        double alpha = rz / p.dot(Ap);
        x += alpha * p;
        r -= alpha * Ap;
        Vector d = r - rs;
        double dn = d.squaredNorm();
        if (dn > 0.0) {
            double theta = std::clamp(-rs.dot(d) / dn, 0.0, 1.0);
            xs += theta * (x - xs);
            rs += theta * d;
        }
        z = dinv.cwiseProduct(r);
        double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
        rep.iterations = it + 1;
    }
    x = xs;
    rep.rel_residual = (b - A * x).norm() / bnorm;
    rep.converged = rep.rel_residual <= opt.tol;
    return rep;
}

SolveReport minres(const SpMat& A, const Vector& b, Vector& x, const SolveOptions& opt) {
    SolveReport rep;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero();
        rep.converged = true;
        return rep;
    }
    if (x.size() != b.size()) x = Vector::Zero(b.size());
    Vector dinv = jacobi_diagonal(A).cwiseInverse();

    Vector r1 = b - A * x;
    Vector y = dinv.cwiseProduct(r1);
    double beta1 = std::sqrt(r1.dot(y));
    if (beta1 == 0.0) {
        rep.converged = true;
        return rep;
    }
    Vector r2 = r1;
    Vector w = Vector::Zero(b.size()), w2 = Vector::Zero(b.size());
    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
    double cs = -1.0, sn = 0.0;

    for (int it = 1; it <= opt.max_iter; ++it) {
        Vector v = y / beta;
        y = A * v;
        if (it >= 2) y -= (beta / oldb) * r1;
        double alfa = v.dot(y);
        y -= (alfa / beta) * r2;
        r1 = r2;
        r2 = y;
        y = dinv.cwiseProduct(r2);
        oldb = beta;
        beta = std::sqrt(std::max(0.0, r2.dot(y)));

        double oldeps = epsln;
        double delta = cs * dbar + sn * alfa;
        double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        double gamma = std::max(std::sqrt(gbar * gbar + beta * beta), 1e-300);
        cs = gbar / gamma;
        sn = beta / gamma;
        double phi = cs * phibar;
        phibar = sn * phibar;

        Vector w1 = w2;
        w2 = w;
        w = (v - oldeps * w1 - delta * w2) / gamma;
        x += phi * w;

        double rel_est = phibar / beta1;
        if (opt.want_trace) rep.trace.push_back(rel_est);
        rep.iterations = it;
        if (rel_est <= 0.2 * opt.tol || it == opt.max_iter) {
            double rel = (b - A * x).norm() / bnorm;
            rep.rel_residual = rel;
            if (rel <= opt.tol) {
                rep.converged = true;
                return rep;
            }
        }
    }
    rep.rel_residual = (b - A * x).norm() / bnorm;
    rep.converged = rep.rel_residual <= opt.tol;
    return rep;
}

void DirectSolver::factorize(const SpMat& A) {
    lu_.analyzePattern(A);
    lu_.factorize(A);
    analyzed_ = true;
    ready_ = lu_.info() == Eigen::Success;
    if (!ready_) throw SolverError("direct factorization failed (singular or structurally deficient)");
}

void DirectSolver::refactorize(const SpMat& A) {
    if (!analyzed_) {
        factorize(A);
        return;
    }
    lu_.factorize(A);
    ready_ = lu_.info() == Eigen::Success;
    if (!ready_) throw SolverError("direct refactorization failed");
}

Vector DirectSolver::solve(const Vector& b) const {
    if (!ready_) throw SolverError("direct solve before factorization");
    return lu_.solve(b);
}

Vector solve_system(const LinearSystem& sys, const SolveOptions& opt, SolveReport* report,
                    const Vector* warm_start) {
    Vector x = warm_start && warm_start->size() == sys.rhs.size() ? *warm_start
                                                                  : Vector::Zero(sys.rhs.size());
    SolveReport rep;
    if (!sys.symmetric) {
        DirectSolver lu;
        lu.factorize(sys.A);
        x = lu.solve(sys.rhs);
        rep.converged = true;
        rep.iterations = 1;
        double bn = sys.rhs.norm();
        rep.rel_residual = bn > 0 ? (sys.rhs - sys.A * x).norm() / bn : 0.0;
    } else if (sys.n_lagrange > 0) {
        rep = minres(sys.A, sys.rhs, x, opt);
    } else {
        rep = pcg(sys.A, sys.rhs, x, opt);
    }
    if (!rep.converged) {
        std::ostringstream os;
        os << "linear solve did not converge: rel_residual=" << rep.rel_residual << " after "
           << rep.iterations << " iterations (tol=" << opt.tol << ")";
        throw SolverError(os.str(), rep.trace);
    }
    // satisfy mean constraints exactly by shifting along their null vectors;
    // solved jointly since the null directions need not be w-orthogonal
    const int m = static_cast<int>(sys.mean_weights.size());
    if (m > 0) {
        Eigen::MatrixXd g(m, m);
        Vector defect(m);
        for (int i = 0; i < m; ++i) {
            const Vector& w = sys.mean_weights[i];
            defect[i] = sys.mean_targets[i] - w.dot(x.head(w.size()));
            for (int j = 0; j < m; ++j) g(i, j) = w.dot(sys.mean_null[j].head(w.size()));
        }
        Vector alpha = g.fullPivLu().solve(defect);
        for (int j = 0; j < m; ++j) {
            const Vector& z = sys.mean_null[j];
            x.head(z.size()) += alpha[j] * z;
        }
    }
    if (report) *report = rep;
    return x;
}

} // namespace ts
