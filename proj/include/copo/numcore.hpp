#pragma once

#include "copo/types.hpp"

namespace copo {

// Eigenpairs of a symmetric matrix, eigenvalues in descending algebraic
// order, eigenvectors as orthonormal columns with a deterministic sign
// convention (first component exceeding `tol` in magnitude is positive).
struct SymmetricSpectrum {
    Vector eigenvalues;
    Matrix eigenvectors;
};

// Zero the diagonal, keep everything else. Idempotent, preserves symmetry
// and off-diagonal entries bit-exactly.
Matrix hollow(const Eigen::Ref<const Matrix>& s);

// Top-k eigenpairs by algebraic eigenvalue of a symmetric matrix.
// Full dense decomposition followed by selection; deterministic output.
SymmetricSpectrum top_k_eigs(const Eigen::Ref<const Matrix>& s, Index k, double tol = 1e-12);

// Lower Cholesky factor of an SPD matrix; throws NotPositiveDefiniteError
// with the failing pivot index otherwise.
Matrix chol_spd(const Eigen::Ref<const Matrix>& s);

// X with S X = B for SPD S.
Matrix spd_solve(const Eigen::Ref<const Matrix>& s, const Eigen::Ref<const Matrix>& b);

// log|S| for SPD S, via the Cholesky diagonal.
double log_det_spd(const Eigen::Ref<const Matrix>& s);

namespace detail {
// Relative symmetry check shared by the symmetric-input entry points.
bool nearly_symmetric(const Eigen::Ref<const Matrix>& s, double rel_tol = 1e-10);
}  // namespace detail

}  // namespace copo
