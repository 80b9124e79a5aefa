#include "copo/datagen.hpp"

#include <algorithm>
#include <cmath>

namespace copo {

namespace {

constexpr double kPi = 3.14159265358979323846;

LabelVector draw_labels(Index n, const Vector& proportions, SeededRng& rng, LabelMode mode) {
    const int k = static_cast<int>(proportions.size());
    LabelVector labels(static_cast<std::size_t>(n));
    if (mode == LabelMode::Balanced) {
        for (Index i = 0; i < n; ++i)
            labels[static_cast<std::size_t>(i)] = static_cast<int>((i * k) / n);
        return labels;
    }
    Vector cum(k);
    double acc = 0.0;
    for (int j = 0; j < k; ++j) {
        acc += proportions(j);
        cum(j) = acc;
    }
    for (Index i = 0; i < n; ++i) {
        const double u = rng.uniform() * acc;
        int z = k - 1;
        for (int j = 0; j < k; ++j) {
            if (u < cum(j)) {
                z = j;
                break;
            }
        }
        labels[static_cast<std::size_t>(i)] = z;
    }
    return labels;
}

// Component parameter layout of the two-cluster gamma mixture: (shape,
// scale) for the first and second half of the coordinates.
struct HalfSplitParams {
    double first_a, first_b;
    double second_a, second_b;
};

Matrix tile_center(Index p, const Vector& block_mean) {
    const Index m = block_mean.size();
    Vector center(p);
    for (Index j = 0; j < p; ++j) center(j) = block_mean(j % m);
    return center;
}

}  // namespace

std::vector<Index> MixtureTruth::cluster_sizes() const {
    std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
    for (int z : labels) {
        if (z < 0 || z >= k) throw ContractError("MixtureTruth: label out of range");
        ++sizes[static_cast<std::size_t>(z)];
    }
    return sizes;
}

Dataset gen_gaussian(Index n, Index p, const Matrix& centers, const std::vector<CovSpec>& covs,
                     const Vector& proportions, SeededRng& rng, LabelMode mode) {
    const int k = static_cast<int>(covs.size());
    if (k < 1) throw ParameterError("gen_gaussian: need at least one component");
    if (centers.rows() != p || centers.cols() != k)
        throw DimensionError("gen_gaussian: centers must be p x K");
    if (proportions.size() != k) throw DimensionError("gen_gaussian: proportions size mismatch");
    // Zero proportions are tolerated for degenerate configs; the affected
    // cluster simply stays empty.
    if ((proportions.array() < 0.0).any() || proportions.maxCoeff() <= 0.0 ||
        std::abs(proportions.sum() - 1.0) > 1e-12)
        throw ParameterError("gen_gaussian: proportions must be nonnegative and sum to 1");
    for (const auto& c : covs) {
        if (c.dim() != p) throw DimensionError("gen_gaussian: covariance dimension mismatch");
        c.ensure_factored();  // SPD required for sampling
    }

    Dataset ds;
    ds.truth.k = k;
    ds.truth.centers = centers;
    ds.truth.covariances = covs;
    ds.truth.proportions = proportions;
    ds.truth.noise_model = NoiseModel::Gaussian;
    ds.truth.labels = draw_labels(n, proportions, rng, mode);

    ds.y.resize(n, p);
    ds.noise.resize(n, p);
    ds.has_noise = true;
    Vector row(p);
    for (Index i = 0; i < n; ++i) {
        const int z = ds.truth.labels[static_cast<std::size_t>(i)];
        row = centers.col(z);
        covs[static_cast<std::size_t>(z)].add_sampled_noise(rng, row);
        ds.y.row(i) = row;
        // Store the realized residual so y - Z* Theta*^T == noise holds
        // bit-exactly.
        ds.noise.row(i) = ds.y.row(i) - centers.col(z).transpose();
    }
    return ds;
}

IsingBlockLaw ising_block_law(const Matrix& interaction, const Vector& field) {
    if (interaction.rows() != 4 || interaction.cols() != 4 || field.size() != 4)
        throw DimensionError("ising_block_law: expected 4x4 interaction and length-4 field");
    IsingBlockLaw law;
    law.probs.resize(16);
    Matrix states(16, 4);
    for (int s = 0; s < 16; ++s)
        for (int j = 0; j < 4; ++j) states(s, j) = (s >> j) & 1 ? 1.0 : -1.0;
    double zsum = 0.0;
    for (int s = 0; s < 16; ++s) {
        const Vector x = states.row(s).transpose();
        law.probs(s) = std::exp(x.dot(interaction * x) + field.dot(x));
        zsum += law.probs(s);
    }
    law.probs /= zsum;
    law.mean = states.transpose() * law.probs;
    Matrix second = Matrix::Zero(4, 4);
    for (int s = 0; s < 16; ++s)
        second += law.probs(s) * (states.row(s).transpose() * states.row(s));
    law.cov = second - law.mean * law.mean.transpose();
    return law;
}

Dataset gen_ising(Index n, Index p, SeededRng& rng) {
    if (p % 4 != 0) throw DimensionError("gen_ising: p must be divisible by 4");

    Matrix g1 = Matrix::Zero(4, 4), g2 = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (i == j) continue;
            g1(i, j) = std::pow(0.1, std::abs(i - j));
            g2(i, j) = std::pow(0.3, std::abs(i - j));
        }
    Vector v1(4), v2(4);
    v1 << -1, -1, -1, -1;
    v2 << -3, -3, -1, -1;

    const IsingBlockLaw laws[2] = {ising_block_law(g1, v1), ising_block_law(g2, v2)};

    Dataset ds;
    ds.truth.k = 2;
    ds.truth.noise_model = NoiseModel::NonGaussian;
    ds.truth.proportions = Vector::Constant(2, 0.5);
    ds.truth.labels = draw_labels(n, ds.truth.proportions, rng, LabelMode::Balanced);
    ds.truth.centers.resize(p, 2);
    const Index nblocks = p / 4;
    for (int c = 0; c < 2; ++c) {
        ds.truth.centers.col(c) = tile_center(p, laws[c].mean);
        std::vector<Matrix> blocks(static_cast<std::size_t>(nblocks), laws[c].cov);
        ds.truth.covariances.push_back(CovSpec::block_diag(std::move(blocks)));
    }

    // Inverse-CDF over the 16 enumerated states, cumulative in state order.
    double cdf[2][16];
    for (int c = 0; c < 2; ++c) {
        double acc = 0.0;
        for (int s = 0; s < 16; ++s) {
            acc += laws[c].probs(s);
            cdf[c][s] = acc;
        }
        cdf[c][15] = 1.0;
    }

    ds.y.resize(n, p);
    ds.noise.resize(n, p);
    ds.has_noise = true;
    for (Index i = 0; i < n; ++i) {
        const int z = ds.truth.labels[static_cast<std::size_t>(i)];
        for (Index b = 0; b < nblocks; ++b) {
            const double u = rng.uniform();
            int s = 0;
            while (s < 15 && u >= cdf[z][s]) ++s;
            for (int j = 0; j < 4; ++j) ds.y(i, 4 * b + j) = (s >> j) & 1 ? 1.0 : -1.0;
        }
        ds.noise.row(i) = ds.y.row(i) - ds.truth.centers.col(z).transpose();
    }
    return ds;
}

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

namespace {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

// P(Z1 >= a, Z2 >= b) = int_a^inf phi(t) UpperTail((b - rho t)/sqrt(1-rho^2)) dt.
double orthant_integrand(double t, double b, double rho) {
    const double s = std::sqrt(1.0 - rho * rho);
    return normal_pdf(t) * normal_upper_tail((b - rho * t) / s);
}

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double flo,
                        double fmid, double fhi, double whole, double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lmid = 0.5 * (lo + mid);
    const double rmid = 0.5 * (mid + hi);
    const double fl = f(lmid);
    const double fr = f(rmid);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, lo, mid, flo, fl, fmid, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, mid, hi, fmid, fr, fhi, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo), fmid = f(mid), fhi = f(hi);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    return adaptive_simpson(f, lo, hi, flo, fmid, fhi, whole, tol, 48);
}

}  // namespace

double bivariate_orthant_upper(double a, double b, double rho) {
    if (!(std::abs(rho) < 1.0)) throw ParameterError("bivariate_orthant_upper: |rho| must be < 1");
    if (rho == 0.0) return normal_upper_tail(a) * normal_upper_tail(b);
    const double hi = std::max({a, b, 0.0}) + 10.0;
    if (a >= hi) return 0.0;
    auto f = [b, rho](double t) { return orthant_integrand(t, b, rho); };
    return integrate(f, a, hi, 1e-13);
}

Dataset gen_probit(Index n, Index p, const RhoSampler& rho_sampler, SeededRng& rng) {
    if (p % 2 != 0) throw DimensionError("gen_probit: p must be even");
    const Index nblocks = p / 2;

    // Per-component thresholds over the two coordinate halves.
    Vector v1(p), v2(p);
    for (Index j = 0; j < p; ++j) {
        v1(j) = j < p / 2 ? 1.0 : 0.1;
        v2(j) = j < p / 2 ? 1.5 : -0.2;
    }
    const Vector* thresholds[2] = {&v1, &v2};

    Dataset ds;
    ds.truth.k = 2;
    ds.truth.noise_model = NoiseModel::NonGaussian;
    ds.truth.proportions = Vector::Constant(2, 0.5);
    ds.truth.labels = draw_labels(n, ds.truth.proportions, rng, LabelMode::Balanced);
    ds.truth.centers.resize(p, 2);

    // One correlation per (component, block), drawn up front so the stored
    // truth matches the sampling law exactly.
    Matrix rho(2, nblocks);
    for (int c = 0; c < 2; ++c)
        for (Index b = 0; b < nblocks; ++b) {
            const double r = rho_sampler(rng);
            if (!(std::abs(r) < 1.0)) throw ParameterError("gen_probit: rho_sampler gave |rho| >= 1");
            rho(c, b) = r;
        }

    for (int c = 0; c < 2; ++c) {
        const Vector& v = *thresholds[c];
        std::vector<Matrix> cov_blocks;
        cov_blocks.reserve(static_cast<std::size_t>(nblocks));
        for (Index b = 0; b < nblocks; ++b) {
            const double va = v(2 * b), vb = v(2 * b + 1);
            const double ma = normal_upper_tail(va);
            const double mb = normal_upper_tail(vb);
            const double joint = bivariate_orthant_upper(va, vb, rho(c, b));
            ds.truth.centers(2 * b, c) = ma;
            ds.truth.centers(2 * b + 1, c) = mb;
            Matrix blk(2, 2);
            blk(0, 0) = ma * (1.0 - ma);
            blk(1, 1) = mb * (1.0 - mb);
            blk(0, 1) = blk(1, 0) = joint - ma * mb;
            cov_blocks.push_back(std::move(blk));
        }
        ds.truth.covariances.push_back(CovSpec::block_diag(std::move(cov_blocks)));
    }

    ds.y.resize(n, p);
    ds.noise.resize(n, p);
    ds.has_noise = true;
    for (Index i = 0; i < n; ++i) {
        const int z = ds.truth.labels[static_cast<std::size_t>(i)];
        const Vector& v = *thresholds[z];
        for (Index b = 0; b < nblocks; ++b) {
            const double r = rho(z, b);
            const double g1 = rng.normal();
            const double g2 = r * g1 + std::sqrt(1.0 - r * r) * rng.normal();
            ds.y(i, 2 * b) = g1 >= v(2 * b) ? 1.0 : 0.0;
            ds.y(i, 2 * b + 1) = g2 >= v(2 * b + 1) ? 1.0 : 0.0;
        }
        ds.noise.row(i) = ds.y.row(i) - ds.truth.centers.col(z).transpose();
    }
    return ds;
}

Dataset gen_probit(Index n, Index p, SeededRng& rng) {
    return gen_probit(
        n, p, [](SeededRng& r) { return -0.8 + 1.6 * r.uniform(); }, rng);
}

double sample_gamma(SeededRng& rng, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw ParameterError("sample_gamma: shape and scale must be positive");
    if (shape < 1.0) {
        // Boost: G(a) = G(a+1) * U^{1/a}.
        const double u = rng.uniform_pos();
        return sample_gamma(rng, shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_pos();
        if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
    }
}

long sample_poisson(SeededRng& rng, double mean) {
    if (mean < 0.0) throw ParameterError("sample_poisson: mean must be nonnegative");
    long count = -1;
    double acc = 0.0;
    while (acc <= mean) {
        acc += -std::log(rng.uniform_pos());
        ++count;
    }
    return count;
}

Dataset gen_gamma(Index n, Index p, SeededRng& rng) {
    if (p % 2 != 0) throw DimensionError("gen_gamma: p must be even");
    const HalfSplitParams comp[2] = {{1.0, 1.0, 0.2, 10.0}, {2.0, 1.0, 1.0, 1.0}};

    Dataset ds;
    ds.truth.k = 2;
    ds.truth.noise_model = NoiseModel::NonGaussian;
    ds.truth.proportions = Vector::Constant(2, 0.5);
    ds.truth.labels = draw_labels(n, ds.truth.proportions, rng, LabelMode::Balanced);
    ds.truth.centers.resize(p, 2);
    for (int c = 0; c < 2; ++c) {
        Vector var(p);
        for (Index j = 0; j < p; ++j) {
            const double a = j < p / 2 ? comp[c].first_a : comp[c].second_a;
            const double b = j < p / 2 ? comp[c].first_b : comp[c].second_b;
            ds.truth.centers(j, c) = a * b;
            var(j) = a * b * b;
        }
        ds.truth.covariances.push_back(CovSpec::diagonal(var));
    }

    ds.y.resize(n, p);
    ds.noise.resize(n, p);
    ds.has_noise = true;
    for (Index i = 0; i < n; ++i) {
        const int z = ds.truth.labels[static_cast<std::size_t>(i)];
        for (Index j = 0; j < p; ++j) {
            const double a = j < p / 2 ? comp[z].first_a : comp[z].second_a;
            const double b = j < p / 2 ? comp[z].first_b : comp[z].second_b;
            ds.y(i, j) = sample_gamma(rng, a, b);
        }
        ds.noise.row(i) = ds.y.row(i) - ds.truth.centers.col(z).transpose();
    }
    return ds;
}

Dataset gen_negbin(Index n, Index p, SeededRng& rng) {
    if (p % 2 != 0) throw DimensionError("gen_negbin: p must be even");
    // (r, q) per half; q is the success probability.
    const HalfSplitParams comp[2] = {{6.0, 0.48, 1.0, 0.08}, {3.0, 0.24, 3.0, 0.24}};
    for (const auto& c : comp)
        if (c.first_b <= 0.0 || c.first_b >= 1.0 || c.second_b <= 0.0 || c.second_b >= 1.0)
            throw ParameterError("gen_negbin: success probability outside (0,1)");

    Dataset ds;
    ds.truth.k = 2;
    ds.truth.noise_model = NoiseModel::NonGaussian;
    ds.truth.proportions = Vector::Constant(2, 0.5);
    ds.truth.labels = draw_labels(n, ds.truth.proportions, rng, LabelMode::Balanced);
    ds.truth.centers.resize(p, 2);
    for (int c = 0; c < 2; ++c) {
        Vector var(p);
        for (Index j = 0; j < p; ++j) {
            const double r = j < p / 2 ? comp[c].first_a : comp[c].second_a;
            const double q = j < p / 2 ? comp[c].first_b : comp[c].second_b;
            ds.truth.centers(j, c) = r * (1.0 - q) / q;
            var(j) = r * (1.0 - q) / (q * q);
        }
        ds.truth.covariances.push_back(CovSpec::diagonal(var));
    }

    ds.y.resize(n, p);
    ds.noise.resize(n, p);
    ds.has_noise = true;
    for (Index i = 0; i < n; ++i) {
        const int z = ds.truth.labels[static_cast<std::size_t>(i)];
        for (Index j = 0; j < p; ++j) {
            const double r = j < p / 2 ? comp[z].first_a : comp[z].second_a;
            const double q = j < p / 2 ? comp[z].first_b : comp[z].second_b;
            const double lambda = sample_gamma(rng, r, (1.0 - q) / q);
            ds.y(i, j) = static_cast<double>(sample_poisson(rng, lambda));
        }
        ds.noise.row(i) = ds.y.row(i) - ds.truth.centers.col(z).transpose();
    }
    return ds;
}

}  // namespace copo
