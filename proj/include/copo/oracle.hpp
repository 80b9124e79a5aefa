#pragma once

#include "copo/datagen.hpp"
#include "copo/embed.hpp"
#include "copo/types.hpp"

#include <optional>
#include <vector>

namespace copo {

// Exact top-K SVD of the mean matrix Z* Theta*^T, computed through the
// K x K eigenproblem of diag(sqrt(n_k)) Theta^T Theta diag(sqrt(n_k)).
struct TruthSpectral {
    Matrix u_star;       // n x K, orthonormal columns; rows constant per cluster
    Vector lambda_star;  // K, descending positive singular values
    Matrix v_star;       // p x K, orthonormal columns
};

TruthSpectral truth_spectral(const MixtureTruth& truth);

// Population quantities of the embedded geometry.
struct ProjectedParams {
    Matrix w;                    // K x K, row k = w_k* = V*^T theta_k*
    std::vector<Matrix> s_mod;   // V*^T Sigma_k V*
    std::vector<Matrix> s_exc;   // excess component from the hollowed noise Gram
    std::vector<Matrix> s_star;  // s_mod + s_exc
    Matrix omega;                // omega(a, b) = (w_a - w_b)^T (S_a*)^{-1} (w_a - w_b)
    double beta = 0.0;           // cluster-balance factor
    double nu = 0.0;             // max/min sqrt(omega) over ordered pairs
    double kappa = 0.0;          // sigma_1* / sigma_K*
    double s_exc_rep_deviation = 0.0;  // max over representative choices (sanity)
};

ProjectedParams projected_params(const MixtureTruth& truth, const TruthSpectral& ts);

// sqrt of min (x-w1)^T s1^{-1} (x-w1) subject to equality of the two
// weighted distances plus `logdet_offset`. Lagrange path + bisection.
struct SnrPairResult {
    double value = 0.0;
    bool center_on_boundary = false;
    double mu = 0.0;  // multiplier at the returned root (0 when flagged)
};

SnrPairResult snr_pair(const Vector& w1, const Vector& w2, const Matrix& s1, const Matrix& s2,
                       double logdet_offset = 0.0);

struct SnrReport {
    double snr = 0.0;
    double snr_mod = 0.0;
    double snr_exc = 0.0;
    std::optional<double> snr_full;  // structured covariances only
    Matrix pair_snr;       // per ordered pair (j1, j2), diagonal zero
    Matrix pair_snr_mod;
    Matrix pair_snr_exc;
};

SnrReport snr_report(const ProjectedParams& pp, const MixtureTruth& truth,
                     const TruthSpectral& ts);

// Gaussian log-density argmax with the true parameters; ties go to the
// lowest index.
int bayes_classify(const Eigen::Ref<const Vector>& y_row, const MixtureTruth& truth);

// Row-wise agreement of the embedding with its first-order expansion
// around the truth subspace.
struct LinearizationReport {
    Vector residual;           // per row: || U_i O - U*_i - L_i - bias_{z_i} ||
    Vector relative_residual;  // residual / ||L_i||
    Vector linear_norm;        // ||L_i||
    double median_residual = 0.0;
    double median_relative = 0.0;
    double q25_relative = 0.0;
    double q75_relative = 0.0;
    double median_linear_norm = 0.0;
};

LinearizationReport linearization_diagnostic(const Dataset& ds, const TruthSpectral& ts,
                                             const Embedding& e);

}  // namespace copo
