#pragma once

#include "copo/numcore.hpp"
#include "copo/types.hpp"

namespace copo {

enum class EmbeddingKind { Hollowed, VanillaSVD };

// Top-k spectral embedding of the samples: orthonormal columns of u, one
// row per sample, with the associated (descending) eigenvalues of the Gram
// matrix. For VanillaSVD the eigenvalues are squared singular values.
struct Embedding {
    Matrix u;            // n x k
    Vector eigenvalues;  // k, descending
    EmbeddingKind kind = EmbeddingKind::Hollowed;
    bool degenerate = false;  // all-zero diagonal-deleted Gram
};

// Top-k eigen subspace of the diagonal-deleted Gram matrix.
Embedding hollowed_embedding(const Eigen::Ref<const Matrix>& y, Index k);

// Top-k left singular subspace of y, via the full Gram matrix.
Embedding svd_embedding(const Eigen::Ref<const Matrix>& y, Index k);

// Rows of u scaled per column: sqrt(max(lambda, 0)) for Hollowed, singular
// values for VanillaSVD.
Matrix scaled_rows(const Embedding& e);

}  // namespace copo
