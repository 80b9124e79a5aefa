#pragma once

#include "copo/embed.hpp"
#include "copo/rng.hpp"
#include "copo/types.hpp"

#include <vector>

namespace copo {

// Per-iteration snapshot of the covariance-aware refinement. Centers and
// covariances are the estimates the reassignment used (computed from the
// previous iteration's labels); `labels` is the assignment after it.
struct ClusterState {
    LabelVector labels;
    Matrix centers;                  // K x K, row k = embedded center of cluster k
    std::vector<Matrix> covariances; // K symmetric K x K, before ridge
    int iteration = 0;
};

struct CopoConfig {
    int k = 2;
    int max_iters = 0;          // 0 -> floor(log n)
    double ridge = 1e-6;
    int min_cluster_size = 2;
    bool add_log_det = false;   // off: matches the pseudo-likelihood rule
    std::uint64_t rng_seed = 0; // initializer stream, used by callers
    int init_restarts = 10;
};

struct CopoResult {
    LabelVector labels;
    std::vector<ClusterState> trace;
    int iterations = 0;
};

// Covariance-aware iterative reassignment in the embedding space: estimate
// per-cluster centers and K x K covariances of the rows of u, then reassign
// each row to the cluster minimizing the ridge-regularized Mahalanobis
// distance. Stops early at a label fixed point.
CopoResult copo(const Embedding& e, const LabelVector& init, const CopoConfig& cfg);

// Lloyd iterations from k-means++ seeding; best inertia over `restarts`
// bundles, each on a derived rng stream, winner by (inertia, index).
struct KMeansResult {
    LabelVector labels;
    double inertia = 0.0;
};
KMeansResult kmeans(const Eigen::Ref<const Matrix>& x, int k, SeededRng& rng, int restarts = 10);

// K-means on the unscaled rows of the embedding.
LabelVector spectral_init(const Embedding& e, int k, SeededRng& rng, int restarts = 10);

// K-means on the scaled embedding rows of the chosen variant.
LabelVector spectral_cluster(const Eigen::Ref<const Matrix>& y, int k, EmbeddingKind variant,
                             SeededRng& rng, int restarts = 10);

}  // namespace copo
