#include "sysid/linalg.hpp"

#include <cmath>

namespace sysid {

Vector solve_least_squares_qr(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Vector>& b) {
    if (A.rows() < A.cols()) {
        throw Error("solve_least_squares_qr: underdetermined system (" + std::to_string(A.rows()) + " rows < " +
                    std::to_string(A.cols()) + " columns)");
    }
    if (A.rows() != b.size()) throw Error("solve_least_squares_qr: right-hand side length mismatch");
    if (!A.allFinite() || !b.allFinite()) throw Error("solve_least_squares_qr: non-finite entries");
    if (A.cols() == 0) return Vector(0);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
    return cod.solve(b);
}

CholeskySolve cholesky_logdet_solve(const Eigen::Ref<const Matrix>& S, const Eigen::Ref<const Vector>& y) {
    const Eigen::Index n = S.rows();
    if (S.cols() != n || y.size() != n) throw Error("cholesky_logdet_solve: dimension mismatch");

    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) {
        // locate the failing pivot with an unblocked factorization
        Matrix L = Matrix::Zero(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            double d = S(j, j) - L.row(j).head(j).squaredNorm();
            if (!(d > 0.0)) throw NumericalError("not positive definite", static_cast<std::size_t>(j));
            L(j, j) = std::sqrt(d);
            for (Eigen::Index i = j + 1; i < n; ++i) {
                L(i, j) = (S(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
            }
        }
        throw NumericalError("not positive definite", static_cast<std::size_t>(n ? n - 1 : 0));
    }

    CholeskySolve out;
    out.lower = llt.matrixL();
    const auto diag = out.lower.diagonal();
    if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
        Eigen::Index bad = 0;
        (diag.array() <= 0.0).cast<int>().maxCoeff(&bad);
        throw NumericalError("not positive definite", static_cast<std::size_t>(bad));
    }
    out.logdet = 2.0 * diag.array().log().sum();
    out.alpha = llt.solve(y);
    return out;
}

JitteredCholesky jittered_cholesky_solve(const Matrix& S, const Eigen::Ref<const Vector>& y) {
    const Eigen::Index n = S.rows();
    double jitter = kJitterRelative * S.trace() / static_cast<double>(std::max<Eigen::Index>(n, 1));
    for (int attempt = 0;; ++attempt) {
        Matrix Sj = S;
        Sj.diagonal().array() += jitter;
        try {
            return {cholesky_logdet_solve(Sj, y), jitter};
        } catch (const NumericalError&) {
            if (attempt >= kJitterRetries) throw;
            jitter *= 10.0;
        }
    }
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x, double rel_step) {
    Vector g(x.size());
    Vector probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = rel_step * (1.0 + std::abs(x[i]));
        probe[i] = x[i] + h;
        const double fp = f(probe);
        probe[i] = x[i] - h;
        const double fm = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericalError("finite_diff_grad: non-finite function value", static_cast<std::size_t>(i));
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace sysid
