#include "copo/embed.hpp"

#include <cmath>

namespace copo {

namespace {

void check_k(const Eigen::Ref<const Matrix>& y, Index k) {
    const Index bound = std::min(y.rows(), y.cols());
    if (k < 1 || k > bound)
        throw DimensionError("embedding: k=" + std::to_string(k) + " out of range [1, " +
                             std::to_string(bound) + "]");
}

}  // namespace

Embedding hollowed_embedding(const Eigen::Ref<const Matrix>& y, Index k) {
    check_k(y, k);
    check_finite(y, "hollowed_embedding");
    Matrix gram(y.rows(), y.rows());
    gram.noalias() = y * y.transpose();
    gram = hollow(gram);

    Embedding e;
    e.kind = EmbeddingKind::Hollowed;
    if (gram.norm() == 0.0) {
        // Single sample per direction leaves no off-diagonal mass; callers
        // fall back to k-means on the zero embedding.
        e.u = Matrix::Zero(y.rows(), k);
        e.eigenvalues = Vector::Zero(k);
        e.degenerate = true;
        return e;
    }
    SymmetricSpectrum spec = top_k_eigs(gram, k);
    e.u = std::move(spec.eigenvectors);
    e.eigenvalues = std::move(spec.eigenvalues);
    return e;
}

Embedding svd_embedding(const Eigen::Ref<const Matrix>& y, Index k) {
    check_k(y, k);
    check_finite(y, "svd_embedding");
    Matrix gram(y.rows(), y.rows());
    gram.noalias() = y * y.transpose();
    SymmetricSpectrum spec = top_k_eigs(gram, k);
    Embedding e;
    e.kind = EmbeddingKind::VanillaSVD;
    e.u = std::move(spec.eigenvectors);
    e.eigenvalues = std::move(spec.eigenvalues);
    return e;
}

Matrix scaled_rows(const Embedding& e) {
    Vector s(e.eigenvalues.size());
    for (Index j = 0; j < s.size(); ++j) s(j) = std::sqrt(std::max(e.eigenvalues(j), 0.0));
    return e.u * s.asDiagonal();
}

}  // namespace copo
