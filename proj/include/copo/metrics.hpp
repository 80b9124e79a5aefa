#pragma once

#include "copo/types.hpp"

#include <vector>

namespace copo {

struct MatchResult {
    std::vector<int> permutation;  // pi*: truth label -> matched estimate label
    double h = 0.0;                // misclustering rate under pi*
    Eigen::MatrixXi confusion;     // confusion(a, b) = #{i : z_i = a, z*_i = b}
};

// Minimum-cost perfect matching on a square cost matrix. Exhaustive for
// K <= 8, Jonker-Volgenant otherwise.
std::vector<int> hungarian(const Eigen::Ref<const Matrix>& cost);

// Misclustering rate h(z, z*): Hamming distance minimized over label
// permutations, lexicographically smallest permutation on ties.
MatchResult misclustering(const LabelVector& z, const LabelVector& z_star, int k);

// Separation-weighted loss: sum of omega(z_i, pi*(z*_i)) over mismatches,
// with pi* from misclustering on the same pair.
double weighted_loss(const LabelVector& z, const LabelVector& z_star,
                     const Eigen::Ref<const Matrix>& omega);

}  // namespace copo
