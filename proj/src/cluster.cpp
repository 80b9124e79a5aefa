#include "copo/cluster.hpp"

#include "copo/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace copo {

namespace {

std::vector<Index> count_clusters(const LabelVector& labels, int k) {
    std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
    for (int z : labels) {
        if (z < 0 || z >= k) throw ContractError("labels out of range [0, K)");
        ++sizes[static_cast<std::size_t>(z)];
    }
    return sizes;
}

// Squared Mahalanobis distances of all rows to one center under the
// Cholesky factor of the regularized covariance.
Vector mahalanobis_sq(const Matrix& u, const Vector& center, const Matrix& chol_lower) {
    Matrix diff = u.transpose();  // K x n
    diff.colwise() -= center;
    const Matrix w = chol_lower.triangularView<Eigen::Lower>().solve(diff);
    return w.colwise().squaredNorm().transpose();
}

struct LloydOutcome {
    LabelVector labels;
    double inertia;
};

LloydOutcome lloyd_once(const Eigen::Ref<const Matrix>& x, int k, SeededRng& rng) {
    const Index n = x.rows();
    const Index d = x.cols();

    // k-means++ seeding.
    Matrix centers(k, d);
    Vector dist2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
    {
        const Index first = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        centers.row(0) = x.row(first);
        for (int c = 1; c < k; ++c) {
            dist2 = dist2.cwiseMin((x.rowwise() - centers.row(c - 1)).rowwise().squaredNorm());
            const double total = dist2.sum();
            Index pick = 0;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                for (Index i = 0; i < n; ++i) {
                    acc += dist2(i);
                    if (target < acc) {
                        pick = i;
                        break;
                    }
                    pick = i;
                }
            } else {
                pick = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
            }
            centers.row(c) = x.row(pick);
        }
    }

    LabelVector labels(static_cast<std::size_t>(n), 0);
    Vector best_d2(n);
    for (int iter = 0; iter < 300; ++iter) {
        // Assignment; ties break to the lowest cluster index.
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            int best = 0;
            double bd = (x.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d2 = (x.row(i) - centers.row(c)).squaredNorm();
                if (d2 < bd) {
                    bd = d2;
                    best = c;
                }
            }
            best_d2(i) = bd;
            if (labels[static_cast<std::size_t>(i)] != best) {
                labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }

        // Empty clusters grab the point farthest from its center.
        auto sizes = count_clusters(labels, k);
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) continue;
            Index far = 0;
            double fd = -1.0;
            for (Index i = 0; i < n; ++i) {
                const auto zi = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
                if (sizes[zi] <= 1) continue;  // keep donors nonempty
                if (best_d2(i) > fd) {
                    fd = best_d2(i);
                    far = i;
                }
            }
            --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
            labels[static_cast<std::size_t>(far)] = c;
            ++sizes[static_cast<std::size_t>(c)];
            best_d2(far) = 0.0;
            changed = true;
        }

        // Update step.
        centers.setZero();
        for (Index i = 0; i < n; ++i) centers.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
        for (int c = 0; c < k; ++c) centers.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);

        if (!changed) break;
    }

    double inertia = 0.0;
    for (Index i = 0; i < n; ++i)
        inertia += (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    return {std::move(labels), inertia};
}

}  // namespace

KMeansResult kmeans(const Eigen::Ref<const Matrix>& x, int k, SeededRng& rng, int restarts) {
    if (k < 1) throw DimensionError("kmeans: k must be >= 1");
    if (x.rows() < k) throw DimensionError("kmeans: need n >= k");
    if (restarts < 1) restarts = 1;
    check_finite(x, "kmeans");

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        SeededRng sub = rng.child(static_cast<std::uint64_t>(r));
        LloydOutcome out = lloyd_once(x, k, sub);
        if (out.inertia < best.inertia) {
            best.inertia = out.inertia;
            best.labels = std::move(out.labels);
        }
    }
    return best;
}

LabelVector spectral_init(const Embedding& e, int k, SeededRng& rng, int restarts) {
    return kmeans(e.u, k, rng, restarts).labels;
}

LabelVector spectral_cluster(const Eigen::Ref<const Matrix>& y, int k, EmbeddingKind variant,
                             SeededRng& rng, int restarts) {
    const Embedding e = variant == EmbeddingKind::Hollowed ? hollowed_embedding(y, k)
                                                           : svd_embedding(y, k);
    return kmeans(scaled_rows(e), k, rng, restarts).labels;
}

CopoResult copo(const Embedding& e, const LabelVector& init, const CopoConfig& cfg) {
    const Index n = e.u.rows();
    const int k = cfg.k;
    if (e.u.cols() != k) throw DimensionError("copo: embedding has wrong number of columns");
    if (static_cast<Index>(init.size()) != n) throw DimensionError("copo: init length mismatch");
    if (cfg.ridge < 0.0) throw ParameterError("copo: ridge must be >= 0");

    const auto init_sizes = count_clusters(init, k);
    for (int c = 0; c < k; ++c)
        if (init_sizes[static_cast<std::size_t>(c)] < cfg.min_cluster_size)
            throw ContractError("copo: init cluster " + std::to_string(c) + " smaller than " +
                                std::to_string(cfg.min_cluster_size));

    // Canonicalize cluster ids by first occurrence in init so that the
    // lowest-index tie-break commutes with relabelings of the input.
    std::vector<int> to_canon(static_cast<std::size_t>(k), -1);
    std::vector<int> from_canon(static_cast<std::size_t>(k), -1);
    {
        int next = 0;
        for (int z : init) {
            if (to_canon[static_cast<std::size_t>(z)] < 0) {
                to_canon[static_cast<std::size_t>(z)] = next;
                from_canon[static_cast<std::size_t>(next)] = z;
                ++next;
            }
        }
    }
    LabelVector labels(init.size());
    for (std::size_t i = 0; i < init.size(); ++i)
        labels[i] = to_canon[static_cast<std::size_t>(init[i])];

    int max_iters = cfg.max_iters;
    if (max_iters <= 0) max_iters = std::max(1, static_cast<int>(std::floor(std::log(static_cast<double>(n)))));

    CopoResult result;
    result.trace.reserve(static_cast<std::size_t>(max_iters));

    for (int iter = 1; iter <= max_iters; ++iter) {
        ClusterState state;
        state.iteration = iter;
        state.centers = Matrix::Zero(k, k);
        state.covariances.assign(static_cast<std::size_t>(k), Matrix::Zero(k, k));

        auto sizes = count_clusters(labels, k);
        std::vector<Matrix> second(static_cast<std::size_t>(k), Matrix::Zero(k, k));
        for (Index i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
            state.centers.row(static_cast<Index>(c)) += e.u.row(i);
            second[c].noalias() += e.u.row(i).transpose() * e.u.row(i);
        }

        // Pooled spread of the whole point cloud; floors the per-cluster
        // ridge so a zero-variance cluster (duplicate embedding rows) still
        // yields an invertible metric.
        const Vector grand_mean = e.u.colwise().mean().transpose();
        const double pooled_scale = std::max(
            (e.u.rowwise() - grand_mean.transpose()).squaredNorm() /
                (static_cast<double>(n) * static_cast<double>(k)),
            std::numeric_limits<double>::min());

        std::vector<Matrix> chol(static_cast<std::size_t>(k));
        Vector half_log_det = Vector::Zero(k);
        for (int c = 0; c < k; ++c) {
            const auto cs = static_cast<std::size_t>(c);
            const double nc = static_cast<double>(sizes[cs]);
            state.centers.row(c) /= nc;
            state.covariances[cs] =
                second[cs] / nc -
                state.centers.row(c).transpose() * state.centers.row(c);
            // Unit-free ridge scaled by the mean eigenvalue, floored by the
            // pooled scale and the center magnitude against degenerate
            // clusters (duplicate rows make the trace collapse to rounding
            // noise of order 1e-16 * |c|^2).
            const double scale =
                std::max({state.covariances[cs].trace() / static_cast<double>(k),
                          1e-6 * pooled_scale,
                          1e-8 * (state.centers.row(c).squaredNorm() + 1e-300)});
            Matrix reg = state.covariances[cs];
            reg.diagonal().array() += cfg.ridge * scale;
            chol[cs] = chol_spd(reg);
            if (cfg.add_log_det)
                half_log_det(c) = chol[cs].diagonal().array().log().sum();
        }

        // Reassign by regularized Mahalanobis distance.
        Matrix dists(n, k);
        for (int c = 0; c < k; ++c)
            dists.col(c) = mahalanobis_sq(e.u, state.centers.row(c).transpose(), chol[static_cast<std::size_t>(c)]);
        if (cfg.add_log_det)
            for (int c = 0; c < k; ++c) dists.col(c).array() += 2.0 * half_log_det(c);

        LabelVector next(labels.size());
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            int best = 0;
            double bd = dists(i, 0);
            for (int c = 1; c < k; ++c) {
                if (dists(i, c) < bd) {
                    bd = dists(i, c);
                    best = c;
                }
            }
            next[static_cast<std::size_t>(i)] = best;
            if (best != labels[static_cast<std::size_t>(i)]) changed = true;
        }

        // Re-seed any emptied cluster with the point farthest (in its own
        // cluster's metric) from its assigned center.
        auto next_sizes = count_clusters(next, k);
        for (int c = 0; c < k; ++c) {
            if (next_sizes[static_cast<std::size_t>(c)] > 0) continue;
            Index far = -1;
            double fd = -1.0;
            for (Index i = 0; i < n; ++i) {
                const int zi = next[static_cast<std::size_t>(i)];
                if (next_sizes[static_cast<std::size_t>(zi)] <= 1) continue;
                if (dists(i, zi) > fd) {
                    fd = dists(i, zi);
                    far = i;
                }
            }
            if (far < 0) throw Error("copo: cannot repopulate empty cluster");
            --next_sizes[static_cast<std::size_t>(next[static_cast<std::size_t>(far)])];
            next[static_cast<std::size_t>(far)] = c;
            ++next_sizes[static_cast<std::size_t>(c)];
            changed = true;
        }

        state.labels = next;
        result.trace.push_back(std::move(state));
        result.iterations = iter;
        labels = std::move(next);
        if (!changed) break;  // fixed point is stable
    }

    // Map canonical ids back to the caller's labeling, states included.
    result.labels.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        result.labels[i] = from_canon[static_cast<std::size_t>(labels[i])];
    for (auto& st : result.trace) {
        for (auto& z : st.labels) z = from_canon[static_cast<std::size_t>(z)];
        Matrix centers(k, k);
        std::vector<Matrix> covs(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c) {
            const int orig = from_canon[static_cast<std::size_t>(c)];
            centers.row(orig) = st.centers.row(c);
            covs[static_cast<std::size_t>(orig)] = st.covariances[static_cast<std::size_t>(c)];
        }
        st.centers = std::move(centers);
        st.covariances = std::move(covs);
    }
    return result;
}

}  // namespace copo
