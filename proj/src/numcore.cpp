#include "copo/numcore.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace copo {

namespace detail {

bool nearly_symmetric(const Eigen::Ref<const Matrix>& s, double rel_tol) {
    if (s.rows() != s.cols()) return false;
    const double scale = 1.0 + s.norm();
    return (s - s.transpose()).norm() <= rel_tol * scale;
}

}  // namespace detail

Matrix hollow(const Eigen::Ref<const Matrix>& s) {
    if (s.rows() != s.cols())
        throw DimensionError("hollow: matrix must be square, got " + std::to_string(s.rows()) +
                             "x" + std::to_string(s.cols()));
    Matrix out = s;
    out.diagonal().setZero();
    return out;
}

SymmetricSpectrum top_k_eigs(const Eigen::Ref<const Matrix>& s, Index k, double tol) {
    const Index n = s.rows();
    if (n == 0 || s.cols() != n)
        throw DimensionError("top_k_eigs: matrix must be square and nonempty");
    if (k < 1 || k > n)
        throw DimensionError("top_k_eigs: k=" + std::to_string(k) + " out of range [1, " +
                             std::to_string(n) + "]");
    if (!detail::nearly_symmetric(s)) throw ContractError("top_k_eigs: matrix is not symmetric");
    check_finite(s, "top_k_eigs");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
    if (solver.info() != Eigen::Success)
        throw Error("top_k_eigs: eigendecomposition did not converge");

    // Solver returns ascending order; take the top-k from the back.
    SymmetricSpectrum spec;
    spec.eigenvalues.resize(k);
    spec.eigenvectors.resize(n, k);
    for (Index j = 0; j < k; ++j) {
        const Index src = n - 1 - j;
        spec.eigenvalues(j) = solver.eigenvalues()(src);
        spec.eigenvectors.col(j) = solver.eigenvectors().col(src);
        for (Index i = 0; i < n; ++i) {
            const double v = spec.eigenvectors(i, j);
            if (std::abs(v) > tol) {
                if (v < 0.0) spec.eigenvectors.col(j) = -spec.eigenvectors.col(j);
                break;
            }
        }
    }
    return spec;
}

Matrix chol_spd(const Eigen::Ref<const Matrix>& s) {
    const Index n = s.rows();
    if (s.cols() != n) throw DimensionError("chol_spd: matrix must be square");
    if (!detail::nearly_symmetric(s)) throw ContractError("chol_spd: matrix is not symmetric");

    // Unblocked left-looking factorization keeps the failing pivot visible.
    Matrix l = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        double d = s(j, j);
        if (j > 0) d -= l.row(j).head(j).squaredNorm();
        if (!(d > 0.0)) throw NotPositiveDefiniteError(j);
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        if (j + 1 < n) {
            auto below = l.block(j + 1, 0, n - j - 1, j);
            l.col(j).tail(n - j - 1) =
                (s.col(j).tail(n - j - 1) - below * l.row(j).head(j).transpose()) / ljj;
        }
    }
    return l;
}

Matrix spd_solve(const Eigen::Ref<const Matrix>& s, const Eigen::Ref<const Matrix>& b) {
    if (s.rows() != b.rows())
        throw DimensionError("spd_solve: dimension mismatch " + std::to_string(s.rows()) +
                             " vs " + std::to_string(b.rows()));
    const Matrix l = chol_spd(s);
    Matrix x = l.triangularView<Eigen::Lower>().solve(b);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
}

double log_det_spd(const Eigen::Ref<const Matrix>& s) {
    const Matrix l = chol_spd(s);
    return 2.0 * l.diagonal().array().log().sum();
}

}  // namespace copo
