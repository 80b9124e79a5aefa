#include "copo/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace copo {

namespace {

std::vector<int> exhaustive_assignment(const Eigen::Ref<const Matrix>& cost) {
    const int k = static_cast<int>(cost.rows());
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    // std::next_permutation walks permutations in lexicographic order, so
    // strict improvement keeps the lexicographically smallest optimum.
    do {
        double c = 0.0;
        for (int i = 0; i < k; ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
        if (c < best_cost) {
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Jonker-Volgenant shortest augmenting paths, O(k^3).
std::vector<int> jv_assignment(const Eigen::Ref<const Matrix>& cost) {
    const int n = static_cast<int>(cost.rows());
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row (1-based)
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1,
                                 std::numeric_limits<double>::infinity());
        std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
        std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = std::numeric_limits<double>::infinity();
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) perm[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
    return perm;
}

}  // namespace

std::vector<int> hungarian(const Eigen::Ref<const Matrix>& cost) {
    if (cost.rows() != cost.cols() || cost.rows() == 0)
        throw DimensionError("hungarian: cost matrix must be square and nonempty");
    if (!cost.allFinite()) throw ContractError("hungarian: cost entries must be finite");
    if (cost.rows() <= 8) return exhaustive_assignment(cost);
    return jv_assignment(cost);
}

MatchResult misclustering(const LabelVector& z, const LabelVector& z_star, int k) {
    if (z.size() != z_star.size())
        throw ContractError("misclustering: label vectors differ in length");
    if (k < 1) throw ContractError("misclustering: k must be >= 1");
    const auto n = z.size();
    if (n == 0) throw ContractError("misclustering: empty label vectors");

    MatchResult res;
    res.confusion = Eigen::MatrixXi::Zero(k, k);
    for (std::size_t i = 0; i < n; ++i) {
        const int a = z[i];
        const int b = z_star[i];
        if (a < 0 || a >= k || b < 0 || b >= k)
            throw ContractError("misclustering: label out of range [0, K)");
        ++res.confusion(a, b);
    }

    // pi maps truth labels to estimate labels; maximizing matched counts is
    // a min-cost assignment on the negated confusion.
    Matrix cost = -res.confusion.cast<double>().transpose();
    res.permutation = hungarian(cost);
    int matched = 0;
    for (int b = 0; b < k; ++b) matched += res.confusion(res.permutation[static_cast<std::size_t>(b)], b);
    res.h = 1.0 - static_cast<double>(matched) / static_cast<double>(n);
    return res;
}

double weighted_loss(const LabelVector& z, const LabelVector& z_star,
                     const Eigen::Ref<const Matrix>& omega) {
    const int k = static_cast<int>(omega.rows());
    if (omega.cols() != k) throw DimensionError("weighted_loss: omega must be square");
    const MatchResult match = misclustering(z, z_star, k);
    double loss = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const int mapped = match.permutation[static_cast<std::size_t>(z_star[i])];
        if (z[i] != mapped) loss += omega(z[i], mapped);
    }
    return loss;
}

}  // namespace copo
