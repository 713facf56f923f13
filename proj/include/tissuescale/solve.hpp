#ifndef TISSUESCALE_SOLVE_HPP
#define TISSUESCALE_SOLVE_HPP

#include "tissuescale/fem.hpp"

#include <Eigen/SparseLU>
#include <memory>

namespace ts {

struct SolveOptions {
    double tol = 1e-10; // relative residual
    int max_iter = 50000;
    bool want_trace = false;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double rel_residual = 0.0;
    std::vector<double> trace; // per-iteration relative residuals when requested
};

/// Jacobi-preconditioned conjugate gradients for SPD systems.
SolveReport pcg(const SpMat& A, const Vector& b, Vector& x, const SolveOptions& opt);

/// MINRES with |diagonal| preconditioning for symmetric (indefinite) systems,
/// used for Lagrange-augmented and saddle-point operators.
SolveReport minres(const SpMat& A, const Vector& b, Vector& x, const SolveOptions& opt);

/// Reusable sparse direct factorization (column-ordered LU).
class DirectSolver {
public:
    void factorize(const SpMat& A);
    /// Re-factorize a matrix with the sparsity pattern of the first call.
    void refactorize(const SpMat& A);
    Vector solve(const Vector& b) const;
    bool ready() const { return ready_; }

private:
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
    bool analyzed_ = false;
    bool ready_ = false;
};

/// Solve a LinearSystem with the method implied by its structure: PCG for
/// unconstrained symmetric systems, MINRES when Lagrange rows are present,
/// LU for nonsymmetric ones. Mean constraints are satisfied exactly by a
/// post-projection along their null vectors; constrained (pinned/tied) dofs
/// are distributed afterwards by the caller. Throws SolverError with the
/// residual trace on non-convergence.
Vector solve_system(const LinearSystem& sys, const SolveOptions& opt, SolveReport* report = nullptr,
                    const Vector* warm_start = nullptr);

} // namespace ts

#endif
