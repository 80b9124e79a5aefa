#pragma once

#include "copo/covspec.hpp"
#include "copo/rng.hpp"
#include "copo/types.hpp"

#include <functional>
#include <vector>

namespace copo {

enum class NoiseModel { Gaussian, NonGaussian };

// Ground truth of a generated mixture: centers as columns of a p x K
// matrix, one structured covariance per cluster, realized labels.
struct MixtureTruth {
    int k = 0;
    Matrix centers;               // p x K
    std::vector<CovSpec> covariances;
    LabelVector labels;           // 0-based
    Vector proportions;
    NoiseModel noise_model = NoiseModel::Gaussian;

    std::vector<Index> cluster_sizes() const;
};

struct Dataset {
    Matrix y;            // n x p
    MixtureTruth truth;
    bool has_noise = false;
    Matrix noise;        // n x p, y - Z* Theta*^T when present
};

enum class LabelMode { Iid, Balanced };

// Gaussian mixture rows theta_{z_i} + L_{z_i} g. Iid mode draws labels from
// `proportions`; Balanced assigns floor-even cluster sizes in order (the
// harness shuffles rows afterwards).
Dataset gen_gaussian(Index n, Index p, const Matrix& centers, const std::vector<CovSpec>& covs,
                     const Vector& proportions, SeededRng& rng, LabelMode mode = LabelMode::Iid);

// Two-component Ising mixture: independent 4-coordinate blocks sampled
// exactly from the 16-state Gibbs law; stored centers/covariances come from
// the same enumeration.
Dataset gen_ising(Index n, Index p, SeededRng& rng);

using RhoSampler = std::function<double(SeededRng&)>;

// Two-component probit mixture: latent 2x2 AR blocks dichotomized at the
// per-component thresholds; stored truth uses exact normal orthant
// probabilities.
Dataset gen_probit(Index n, Index p, const RhoSampler& rho_sampler, SeededRng& rng);
Dataset gen_probit(Index n, Index p, SeededRng& rng);  // rho ~ Uniform(-0.8, 0.8)

// Two-component gamma mixture with the fixed shape/scale layout.
Dataset gen_gamma(Index n, Index p, SeededRng& rng);

// Two-component negative binomial mixture. NB(r, q) counts failures before
// the r-th success (mean r(1-q)/q); non-integer r via gamma-Poisson mixing.
Dataset gen_negbin(Index n, Index p, SeededRng& rng);

// Exact 16-state enumeration of one 4-spin block: probabilities in
// lexicographic state order (bit 0 -> coordinate 0, bit value 1 -> +1),
// mean vector, and covariance.
struct IsingBlockLaw {
    Vector probs;   // 16
    Vector mean;    // 4
    Matrix cov;     // 4 x 4
};
IsingBlockLaw ising_block_law(const Matrix& interaction, const Vector& field);

// Standard normal upper tail P(Z >= x).
double normal_upper_tail(double x);

// P(Z1 >= a, Z2 >= b) for correlated standard normals, |rho| < 1, by 1-D
// adaptive quadrature.
double bivariate_orthant_upper(double a, double b, double rho);

// Marsaglia-Tsang gamma draw (shape/scale), boosted for shape < 1.
double sample_gamma(SeededRng& rng, double shape, double scale);

// Exponential-arrival Poisson draw, exact for any mean.
long sample_poisson(SeededRng& rng, double mean);

}  // namespace copo
