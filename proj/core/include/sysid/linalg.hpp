#pragma once

#include <functional>

#include "sysid/common.hpp"

namespace sysid {

/// Minimizes ||A x - b||_2 by complete orthogonal decomposition (Householder QR
/// with column pivoting); rank-deficient systems get the minimum-norm solution.
/// Requires rows >= cols and finite entries.
Vector solve_least_squares_qr(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Vector>& b);

struct CholeskySolve {
    Vector alpha;          // S^{-1} y
    double logdet = 0.0;   // log |S|
    Matrix lower;          // Cholesky factor L, S = L L^T
};

/// Solves S alpha = y for symmetric positive definite S. Never adds jitter;
/// a non-positive pivot raises NumericalError carrying the pivot index.
CholeskySolve cholesky_logdet_solve(const Eigen::Ref<const Matrix>& S, const Eigen::Ref<const Vector>& y);

struct JitteredCholesky {
    CholeskySolve solve;
    double jitter = 0.0;  // diagonal value that was added
};

/// Adds 1e-10 * trace(S) / n to the diagonal and factorizes, escalating the jitter
/// by 10x up to three times when factorization fails.
JitteredCholesky jittered_cholesky_solve(const Matrix& S, const Eigen::Ref<const Vector>& y);

inline constexpr double kJitterRelative = 1e-10;
inline constexpr int kJitterRetries = 3;

/// Central differences with step h_i = rel_step * (1 + |x_i|).
Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x,
                        double rel_step = 1e-6);

}  // namespace sysid
