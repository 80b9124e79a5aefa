#include "copo/oracle.hpp"

#include "copo/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>

namespace copo {

namespace {

// Deterministic sign fix shared with top_k_eigs.
void fix_signs(Matrix& v, double tol = 1e-12) {
    for (Index j = 0; j < v.cols(); ++j) {
        for (Index i = 0; i < v.rows(); ++i) {
            if (std::abs(v(i, j)) > tol) {
                if (v(i, j) < 0.0) v.col(j) = -v.col(j);
                break;
            }
        }
    }
}

Matrix inverse_spd(const Matrix& s) {
    return spd_solve(s, Matrix::Identity(s.rows(), s.cols()));
}

double interp_quantile(std::vector<double> vals, double q) {
    std::sort(vals.begin(), vals.end());
    if (vals.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(vals.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, vals.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * vals[lo] + w * vals[hi];
}

// One Lagrange-path root solve shared by the projected and ambient SNR
// problems. x(mu) minimizes (1-mu) f + mu h; a root of g = f - h on the
// path is the global constrained minimum of f on {f = h}.
struct PathCallbacks {
    std::function<void(double mu, Vector& x)> solve_path;  // fills x(mu)
    std::function<double(const Vector&)> f;                // distance from center 1
    std::function<double(const Vector&)> h;                // distance from center 2 + offset
    double g_at_center1;  // g(w1) = -h(w1)
    double g_at_center2;  // g limit at mu -> 1: f(w2) - offset
};

SnrPairResult solve_snr_path(const PathCallbacks& cb, Index dim) {
    SnrPairResult out;
    if (cb.g_at_center1 >= 0.0) {
        out.center_on_boundary = true;
        out.value = 0.0;
        return out;
    }

    constexpr int kGrid = 1024;
    std::vector<double> mu_grid;
    std::vector<double> g_vals;
    mu_grid.reserve(kGrid + 2);
    g_vals.reserve(kGrid + 2);
    mu_grid.push_back(0.0);
    g_vals.push_back(cb.g_at_center1);

    Vector x(dim);
    auto g_of = [&](double mu) {
        cb.solve_path(mu, x);
        return cb.f(x) - cb.h(x);
    };
    for (int j = 1; j <= kGrid; ++j) {
        const double mu = static_cast<double>(j) / static_cast<double>(kGrid + 1);
        mu_grid.push_back(mu);
        g_vals.push_back(g_of(mu));
    }
    mu_grid.push_back(1.0);
    g_vals.push_back(cb.g_at_center2);

    double best_obj = std::numeric_limits<double>::infinity();
    double best_mu = 0.0;
    bool found = false;
    for (std::size_t j = 0; j + 1 < mu_grid.size(); ++j) {
        double glo = g_vals[j];
        double ghi = g_vals[j + 1];
        if (glo == 0.0 && j > 0) {
            cb.solve_path(mu_grid[j], x);
            const double obj = cb.f(x);
            if (obj < best_obj) {
                best_obj = obj;
                best_mu = mu_grid[j];
            }
            found = true;
            continue;
        }
        if (!(glo < 0.0 && ghi > 0.0) && !(glo > 0.0 && ghi < 0.0)) continue;
        double lo = mu_grid[j];
        double hi = mu_grid[j + 1];
        double gmid = 0.0;
        while (hi - lo > 1e-15) {
            const double mid = 0.5 * (lo + hi);
            gmid = g_of(mid);
            if (std::abs(gmid) <= 1e-12) {
                lo = hi = mid;
                break;
            }
            if ((gmid < 0.0) == (glo < 0.0)) {
                lo = mid;
                glo = gmid;
            } else {
                hi = mid;
            }
        }
        const double mu_root = 0.5 * (lo + hi);
        cb.solve_path(mu_root, x);
        const double obj = cb.f(x);
        if (obj < best_obj) {
            best_obj = obj;
            best_mu = mu_root;
        }
        found = true;
    }

    if (!found)
        throw SolverFailureError("snr_pair: no boundary crossing on the multiplier path",
                                 std::move(mu_grid), std::move(g_vals));
    out.value = std::sqrt(std::max(best_obj, 0.0));
    out.mu = best_mu;
    return out;
}

bool structured_for_full(const CovSpec& c) {
    return c.kind() == CovSpec::Kind::Diagonal || c.kind() == CovSpec::Kind::BlockDiag;
}

// Common block partition of two structured covariances; diagonal specs
// adopt the partner's partition, two block specs must agree.
std::vector<Index> common_partition(const CovSpec& a, const CovSpec& b) {
    auto sizes_of = [](const CovSpec& c) {
        std::vector<Index> sizes;
        if (c.kind() == CovSpec::Kind::BlockDiag)
            for (const auto& blk : c.blocks()) sizes.push_back(blk.rows());
        return sizes;
    };
    const auto sa = sizes_of(a);
    const auto sb = sizes_of(b);
    if (sa.empty() && sb.empty()) return {};  // both diagonal
    if (sa.empty()) return sb;
    if (sb.empty()) return sa;
    if (sa != sb) throw DimensionError("snr_full: block partitions differ");
    return sa;
}

std::vector<Matrix> block_inverses(const CovSpec& c, const std::vector<Index>& partition) {
    std::vector<Matrix> out;
    if (partition.empty()) return out;
    out.reserve(partition.size());
    Index at = 0;
    if (c.kind() == CovSpec::Kind::Diagonal) {
        for (Index m : partition) {
            Matrix inv = Matrix::Zero(m, m);
            inv.diagonal() = c.variances().segment(at, m).cwiseInverse();
            out.push_back(std::move(inv));
            at += m;
        }
    } else {
        for (const auto& blk : c.blocks()) out.push_back(inverse_spd(blk));
    }
    return out;
}

std::optional<double> snr_full_structured(const MixtureTruth& truth) {
    for (const auto& c : truth.covariances)
        if (!structured_for_full(c)) return std::nullopt;

    const int k = truth.k;
    double best = std::numeric_limits<double>::infinity();
    for (int j1 = 0; j1 < k; ++j1) {
        for (int j2 = 0; j2 < k; ++j2) {
            if (j1 == j2) continue;
            const CovSpec& c1 = truth.covariances[static_cast<std::size_t>(j1)];
            const CovSpec& c2 = truth.covariances[static_cast<std::size_t>(j2)];
            const Vector t1 = truth.centers.col(j1);
            const Vector t2 = truth.centers.col(j2);
            const double offset = c2.log_det() - c1.log_det();

            std::vector<Index> partition;
            try {
                partition = common_partition(c1, c2);
            } catch (const DimensionError&) {
                return std::nullopt;
            }

            PathCallbacks cb;
            if (partition.empty()) {
                // Pure diagonal: closed-form path per coordinate.
                const Vector a = c1.variances().cwiseInverse();
                const Vector b = c2.variances().cwiseInverse();
                cb.solve_path = [&, a, b, t1, t2](double mu, Vector& x) {
                    x = ((1.0 - mu) * a.array() * t1.array() + mu * b.array() * t2.array()) /
                        ((1.0 - mu) * a.array() + mu * b.array());
                };
                cb.f = [a, t1](const Vector& x) {
                    return ((x - t1).array().square() * a.array()).sum();
                };
                cb.h = [b, t2, offset](const Vector& x) {
                    return ((x - t2).array().square() * b.array()).sum() + offset;
                };
            } else {
                auto inv1 = std::make_shared<std::vector<Matrix>>(block_inverses(c1, partition));
                auto inv2 = std::make_shared<std::vector<Matrix>>(block_inverses(c2, partition));
                auto part = std::make_shared<std::vector<Index>>(partition);
                cb.solve_path = [inv1, inv2, part, t1, t2](double mu, Vector& x) {
                    Index at = 0;
                    for (std::size_t b = 0; b < part->size(); ++b) {
                        const Index m = (*part)[b];
                        const Matrix mix = (1.0 - mu) * (*inv1)[b] + mu * (*inv2)[b];
                        const Vector rhs = (1.0 - mu) * (*inv1)[b] * t1.segment(at, m) +
                                           mu * (*inv2)[b] * t2.segment(at, m);
                        x.segment(at, m) = spd_solve(mix, rhs);
                        at += m;
                    }
                };
                cb.f = [inv1, part, t1](const Vector& x) {
                    double acc = 0.0;
                    Index at = 0;
                    for (std::size_t b = 0; b < part->size(); ++b) {
                        const Index m = (*part)[b];
                        const Vector d = x.segment(at, m) - t1.segment(at, m);
                        acc += d.dot((*inv1)[b] * d);
                        at += m;
                    }
                    return acc;
                };
                cb.h = [inv2, part, t2, offset](const Vector& x) {
                    double acc = 0.0;
                    Index at = 0;
                    for (std::size_t b = 0; b < part->size(); ++b) {
                        const Index m = (*part)[b];
                        const Vector d = x.segment(at, m) - t2.segment(at, m);
                        acc += d.dot((*inv2)[b] * d);
                        at += m;
                    }
                    return acc + offset;
                };
            }
            Vector probe = t1;
            cb.g_at_center1 = -cb.h(probe);
            probe = t2;
            cb.g_at_center2 = cb.f(probe) - offset;
            const SnrPairResult r = solve_snr_path(cb, truth.centers.rows());
            best = std::min(best, r.value);
        }
    }
    return best;
}

}  // namespace

TruthSpectral truth_spectral(const MixtureTruth& truth) {
    const int k = truth.k;
    if (truth.centers.cols() != k) throw DimensionError("truth_spectral: centers must be p x K");
    const auto sizes = truth.cluster_sizes();
    for (int c = 0; c < k; ++c)
        if (sizes[static_cast<std::size_t>(c)] == 0)
            throw RankError("truth_spectral: cluster " + std::to_string(c) + " is empty");

    Vector sqrt_n(k);
    for (int c = 0; c < k; ++c) sqrt_n(c) = std::sqrt(static_cast<double>(sizes[static_cast<std::size_t>(c)]));

    const Matrix gram = truth.centers.transpose() * truth.centers;  // K x K
    const Matrix m = sqrt_n.asDiagonal() * gram * sqrt_n.asDiagonal();
    SymmetricSpectrum spec = top_k_eigs(m, k);

    const double lead = spec.eigenvalues(0);
    if (!(lead > 0.0) || spec.eigenvalues(k - 1) <= 1e-12 * lead)
        throw RankError("truth_spectral: centers are not linearly independent");

    TruthSpectral ts;
    ts.lambda_star = spec.eigenvalues.array().sqrt();
    fix_signs(spec.eigenvectors);
    const Matrix q = spec.eigenvectors;

    ts.u_star.resize(static_cast<Index>(truth.labels.size()), k);
    for (Index i = 0; i < ts.u_star.rows(); ++i) {
        const int z = truth.labels[static_cast<std::size_t>(i)];
        ts.u_star.row(i) = q.row(z) / sqrt_n(z);
    }
    ts.v_star = truth.centers * sqrt_n.asDiagonal() * q * ts.lambda_star.cwiseInverse().asDiagonal();
    return ts;
}

ProjectedParams projected_params(const MixtureTruth& truth, const TruthSpectral& ts) {
    const int k = truth.k;
    const auto sizes = truth.cluster_sizes();
    const Index n = static_cast<Index>(truth.labels.size());
    if (ts.lambda_star.minCoeff() <= 0.0) throw RankError("projected_params: zero singular value");

    ProjectedParams pp;
    pp.w = truth.centers.transpose() * ts.v_star;  // row k = w_k*

    // Embedded center rows, one per cluster (rows of U* are constant
    // within clusters).
    Matrix c_rows(k, k);
    std::vector<Index> first_member(static_cast<std::size_t>(k), -1);
    std::vector<Index> last_member(static_cast<std::size_t>(k), -1);
    for (Index i = 0; i < n; ++i) {
        const auto z = static_cast<std::size_t>(truth.labels[static_cast<std::size_t>(i)]);
        if (first_member[z] < 0) {
            first_member[z] = i;
            c_rows.row(static_cast<Index>(z)) = ts.u_star.row(i);
        }
        last_member[z] = i;
    }

    Matrix trace_prod(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = a; b < k; ++b) {
            trace_prod(a, b) = CovSpec::trace_product(truth.covariances[static_cast<std::size_t>(a)],
                                                      truth.covariances[static_cast<std::size_t>(b)]);
            trace_prod(b, a) = trace_prod(a, b);
        }

    const Vector inv_lambda = ts.lambda_star.cwiseInverse();
    pp.s_mod.resize(static_cast<std::size_t>(k));
    pp.s_exc.resize(static_cast<std::size_t>(k));
    pp.s_star.resize(static_cast<std::size_t>(k));
    pp.s_exc_rep_deviation = 0.0;
    for (int c = 0; c < k; ++c) {
        Matrix sm = truth.covariances[static_cast<std::size_t>(c)].project(ts.v_star);
        sm = 0.5 * (sm + sm.transpose()).eval();
        pp.s_mod[static_cast<std::size_t>(c)] = sm;

        // E[ H(EE^T)_{.,i} H(EE^T)_{i,.} ] is diagonal with entries
        // Tr(Sigma_{z_i'} Sigma_k) off the representative index, so the
        // excess term collapses onto the cluster rows of U*.
        auto exc_for = [&](Index rep) {
            Matrix acc = Matrix::Zero(k, k);
            for (int a = 0; a < k; ++a) {
                double mass = static_cast<double>(sizes[static_cast<std::size_t>(a)]) * trace_prod(a, c);
                if (a == truth.labels[static_cast<std::size_t>(rep)]) mass -= trace_prod(c, c);
                acc.noalias() += mass * c_rows.row(a).transpose() * c_rows.row(a);
            }
            return Matrix(inv_lambda.asDiagonal() * acc * inv_lambda.asDiagonal());
        };
        const Matrix exc = exc_for(first_member[static_cast<std::size_t>(c)]);
        const Matrix exc_alt = exc_for(last_member[static_cast<std::size_t>(c)]);
        pp.s_exc_rep_deviation = std::max(pp.s_exc_rep_deviation, (exc - exc_alt).norm());
        pp.s_exc[static_cast<std::size_t>(c)] = exc;
        pp.s_star[static_cast<std::size_t>(c)] = sm + exc;
    }

    pp.omega = Matrix::Zero(k, k);
    for (int a = 0; a < k; ++a) {
        const Matrix chol = chol_spd(pp.s_star[static_cast<std::size_t>(a)]);
        for (int b = 0; b < k; ++b) {
            if (a == b) continue;
            const Vector d = (pp.w.row(a) - pp.w.row(b)).transpose();
            const Vector wht = chol.triangularView<Eigen::Lower>().solve(d);
            pp.omega(a, b) = wht.squaredNorm();
        }
    }

    Index max_n = 0, min_n = n;
    for (auto s : sizes) {
        max_n = std::max(max_n, s);
        min_n = std::min(min_n, s);
    }
    pp.beta = std::max(static_cast<double>(k) * static_cast<double>(max_n) / static_cast<double>(n),
                       static_cast<double>(n) / (static_cast<double>(k) * static_cast<double>(min_n)));
    pp.kappa = ts.lambda_star(0) / ts.lambda_star(k - 1);
    double omin = std::numeric_limits<double>::infinity(), omax = 0.0;
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
            if (a == b) continue;
            omin = std::min(omin, pp.omega(a, b));
            omax = std::max(omax, pp.omega(a, b));
        }
    pp.nu = k > 1 ? std::sqrt(omax / omin) : 1.0;
    return pp;
}

SnrPairResult snr_pair(const Vector& w1, const Vector& w2, const Matrix& s1, const Matrix& s2,
                       double logdet_offset) {
    const Index d = w1.size();
    if (w2.size() != d || s1.rows() != d || s1.cols() != d || s2.rows() != d || s2.cols() != d)
        throw DimensionError("snr_pair: dimension mismatch");
    const Matrix a = inverse_spd(s1);
    const Matrix b = inverse_spd(s2);

    PathCallbacks cb;
    cb.solve_path = [&a, &b, &w1, &w2](double mu, Vector& x) {
        const Matrix mix = (1.0 - mu) * a + mu * b;
        const Vector rhs = (1.0 - mu) * (a * w1) + mu * (b * w2);
        x = spd_solve(mix, rhs);
    };
    cb.f = [&a, &w1](const Vector& x) {
        const Vector diff = x - w1;
        return diff.dot(a * diff);
    };
    cb.h = [&b, &w2, logdet_offset](const Vector& x) {
        const Vector diff = x - w2;
        return diff.dot(b * diff) + logdet_offset;
    };
    cb.g_at_center1 = -cb.h(w1);
    cb.g_at_center2 = cb.f(w2) - logdet_offset;
    return solve_snr_path(cb, d);
}

SnrReport snr_report(const ProjectedParams& pp, const MixtureTruth& truth,
                     const TruthSpectral&) {
    const int k = truth.k;
    SnrReport rep;
    rep.pair_snr = Matrix::Zero(k, k);
    rep.pair_snr_mod = Matrix::Zero(k, k);
    rep.pair_snr_exc = Matrix::Zero(k, k);
    double mn = std::numeric_limits<double>::infinity();
    double mn_mod = mn, mn_exc = mn;
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
            if (a == b) continue;
            const Vector wa = pp.w.row(a).transpose();
            const Vector wb = pp.w.row(b).transpose();
            rep.pair_snr(a, b) =
                snr_pair(wa, wb, pp.s_star[static_cast<std::size_t>(a)], pp.s_star[static_cast<std::size_t>(b)]).value;
            rep.pair_snr_mod(a, b) =
                snr_pair(wa, wb, pp.s_mod[static_cast<std::size_t>(a)], pp.s_mod[static_cast<std::size_t>(b)]).value;
            rep.pair_snr_exc(a, b) =
                snr_pair(wa, wb, pp.s_exc[static_cast<std::size_t>(a)], pp.s_exc[static_cast<std::size_t>(b)]).value;
            mn = std::min(mn, rep.pair_snr(a, b));
            mn_mod = std::min(mn_mod, rep.pair_snr_mod(a, b));
            mn_exc = std::min(mn_exc, rep.pair_snr_exc(a, b));
        }
    rep.snr = mn;
    rep.snr_mod = mn_mod;
    rep.snr_exc = mn_exc;
    rep.snr_full = snr_full_structured(truth);
    return rep;
}

int bayes_classify(const Eigen::Ref<const Vector>& y_row, const MixtureTruth& truth) {
    if (truth.noise_model != NoiseModel::Gaussian)
        throw UnsupportedError("bayes_classify: truth is not Gaussian");
    if (y_row.size() != truth.centers.rows())
        throw DimensionError("bayes_classify: dimension mismatch");
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < truth.k; ++c) {
        const CovSpec& cov = truth.covariances[static_cast<std::size_t>(c)];
        const Vector diff = y_row - truth.centers.col(c);
        const double score = -0.5 * cov.quad_form_inv(diff) - 0.5 * cov.log_det();
        if (score > best_score) {
            best_score = score;
            best = c;
        }
    }
    return best;
}

LinearizationReport linearization_diagnostic(const Dataset& ds, const TruthSpectral& ts,
                                             const Embedding& e) {
    if (!ds.has_noise) throw UnsupportedError("linearization_diagnostic: realized noise not stored");
    const Index n = ds.y.rows();
    const Index k = ts.u_star.cols();
    if (e.u.rows() != n || e.u.cols() != k)
        throw DimensionError("linearization_diagnostic: embedding shape mismatch");

    // Orthogonal alignment of U with U*.
    const Matrix b = e.u.transpose() * ts.u_star;
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix align = svd.matrixU() * svd.matrixV().transpose();

    const Vector inv_l1 = ts.lambda_star.cwiseInverse();
    const Vector inv_l2 = inv_l1.array().square();

    Matrix hgram(n, n);
    hgram.noalias() = ds.noise * ds.noise.transpose();
    hgram = hollow(hgram);

    // First-order term: E V* L^{-1} + H(EE^T) U* L^{-2}.
    Matrix linear = ds.noise * ts.v_star * inv_l1.asDiagonal();
    linear.noalias() += hgram * ts.u_star * inv_l2.asDiagonal();

    // Bias: -U* [U*^T (H + E M*^T) U*] L^{-2} - (I - U* U*^T) diag(M* M*^T) U* L^{-2}.
    const Matrix ev = ds.noise * ts.v_star;  // n x K
    const Matrix t1 = ts.u_star.transpose() * hgram * ts.u_star +
                      (ts.u_star.transpose() * ev) * ts.lambda_star.asDiagonal();
    Vector mean_sq_norm(n);
    for (Index i = 0; i < n; ++i)
        mean_sq_norm(i) =
            ds.truth.centers.col(ds.truth.labels[static_cast<std::size_t>(i)]).squaredNorm();
    const Matrix du = mean_sq_norm.asDiagonal() * ts.u_star;
    Matrix bias = -(ts.u_star * t1) * inv_l2.asDiagonal();
    bias -= (du - ts.u_star * (ts.u_star.transpose() * du)) * inv_l2.asDiagonal();

    const Matrix resid_mat = e.u * align - ts.u_star - linear - bias;

    LinearizationReport rep;
    rep.residual = resid_mat.rowwise().norm();
    rep.linear_norm = linear.rowwise().norm();
    rep.relative_residual.resize(n);
    for (Index i = 0; i < n; ++i)
        rep.relative_residual(i) = rep.linear_norm(i) > 0.0
                                       ? rep.residual(i) / rep.linear_norm(i)
                                       : std::numeric_limits<double>::infinity();

    std::vector<double> rv(rep.residual.data(), rep.residual.data() + n);
    std::vector<double> rr(rep.relative_residual.data(), rep.relative_residual.data() + n);
    std::vector<double> ln(rep.linear_norm.data(), rep.linear_norm.data() + n);
    rep.median_residual = interp_quantile(rv, 0.5);
    rep.median_relative = interp_quantile(rr, 0.5);
    rep.q25_relative = interp_quantile(rr, 0.25);
    rep.q75_relative = interp_quantile(rr, 0.75);
    rep.median_linear_norm = interp_quantile(ln, 0.5);
    return rep;
}

}  // namespace copo
