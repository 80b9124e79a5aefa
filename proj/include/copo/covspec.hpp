#pragma once

#include "copo/rng.hpp"
#include "copo/types.hpp"

#include <vector>

namespace copo {

// Structured p x p covariance. Diagonal and block-diagonal forms keep
// dimensions in the thousands tractable; Dense is for small p and tests.
class CovSpec {
public:
    enum class Kind { Diagonal, BlockDiag, Dense };

    static CovSpec diagonal(Vector variances);
    static CovSpec block_diag(std::vector<Matrix> blocks);
    static CovSpec dense(Matrix sigma);
    static CovSpec identity(Index p);

    Kind kind() const { return kind_; }
    Index dim() const { return dim_; }

    const Vector& variances() const;
    const std::vector<Matrix>& blocks() const;
    const Matrix& dense_matrix() const;

    Matrix materialize() const;

    // v^T Sigma v for a p x r matrix v, computed blockwise.
    Matrix project(const Eigen::Ref<const Matrix>& v) const;

    // Sigma^{-1} x; requires SPD.
    Vector solve(const Eigen::Ref<const Vector>& x) const;

    double log_det() const;

    // x^T Sigma^{-1} x.
    double quad_form_inv(const Eigen::Ref<const Vector>& x) const;

    // Appends theta + L g to `row` where L L^T = Sigma and g is standard
    // normal from rng; `row` must have size p.
    void add_sampled_noise(SeededRng& rng, Eigen::Ref<Vector> row) const;

    // Tr(A B) for two structured covariances of equal dimension. BlockDiag
    // pairs must share the same partition.
    static double trace_product(const CovSpec& a, const CovSpec& b);

    // Caches Cholesky factors for repeated sampling/solves.
    void ensure_factored() const;

private:
    CovSpec() = default;

    Kind kind_ = Kind::Diagonal;
    Index dim_ = 0;
    Vector variances_;
    std::vector<Matrix> blocks_;
    Matrix dense_;
    mutable std::vector<Matrix> block_factors_;
    mutable Matrix dense_factor_;
    mutable bool factored_ = false;
};

}  // namespace copo
