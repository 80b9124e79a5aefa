#include "copo/covspec.hpp"

#include "copo/numcore.hpp"

#include <cmath>

namespace copo {

CovSpec CovSpec::diagonal(Vector variances) {
    if (variances.size() == 0) throw DimensionError("CovSpec: empty diagonal");
    if ((variances.array() < 0.0).any())
        throw ParameterError("CovSpec: negative variance on the diagonal");
    CovSpec c;
    c.kind_ = Kind::Diagonal;
    c.dim_ = variances.size();
    c.variances_ = std::move(variances);
    return c;
}

CovSpec CovSpec::block_diag(std::vector<Matrix> blocks) {
    if (blocks.empty()) throw DimensionError("CovSpec: no blocks");
    Index p = 0;
    for (const auto& b : blocks) {
        if (b.rows() != b.cols() || b.rows() == 0)
            throw DimensionError("CovSpec: blocks must be square and nonempty");
        if (!detail::nearly_symmetric(b)) throw ContractError("CovSpec: block not symmetric");
        p += b.rows();
    }
    CovSpec c;
    c.kind_ = Kind::BlockDiag;
    c.dim_ = p;
    c.blocks_ = std::move(blocks);
    return c;
}

CovSpec CovSpec::dense(Matrix sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
        throw DimensionError("CovSpec: dense covariance must be square");
    if (!detail::nearly_symmetric(sigma)) throw ContractError("CovSpec: dense covariance not symmetric");
    CovSpec c;
    c.kind_ = Kind::Dense;
    c.dim_ = sigma.rows();
    c.dense_ = std::move(sigma);
    return c;
}

CovSpec CovSpec::identity(Index p) { return diagonal(Vector::Ones(p)); }

const Vector& CovSpec::variances() const {
    if (kind_ != Kind::Diagonal) throw ContractError("CovSpec: not diagonal");
    return variances_;
}

const std::vector<Matrix>& CovSpec::blocks() const {
    if (kind_ != Kind::BlockDiag) throw ContractError("CovSpec: not block-diagonal");
    return blocks_;
}

const Matrix& CovSpec::dense_matrix() const {
    if (kind_ != Kind::Dense) throw ContractError("CovSpec: not dense");
    return dense_;
}

Matrix CovSpec::materialize() const {
    switch (kind_) {
        case Kind::Diagonal:
            return Matrix(variances_.asDiagonal());
        case Kind::Dense:
            return dense_;
        case Kind::BlockDiag: {
            Matrix out = Matrix::Zero(dim_, dim_);
            Index at = 0;
            for (const auto& b : blocks_) {
                out.block(at, at, b.rows(), b.cols()) = b;
                at += b.rows();
            }
            return out;
        }
    }
    throw Error("CovSpec: unreachable");
}

Matrix CovSpec::project(const Eigen::Ref<const Matrix>& v) const {
    if (v.rows() != dim_) throw DimensionError("CovSpec::project: dimension mismatch");
    switch (kind_) {
        case Kind::Diagonal:
            return v.transpose() * variances_.asDiagonal() * v;
        case Kind::Dense:
            return v.transpose() * dense_ * v;
        case Kind::BlockDiag: {
            Matrix out = Matrix::Zero(v.cols(), v.cols());
            Index at = 0;
            for (const auto& b : blocks_) {
                const auto vb = v.middleRows(at, b.rows());
                out.noalias() += vb.transpose() * b * vb;
                at += b.rows();
            }
            return out;
        }
    }
    throw Error("CovSpec: unreachable");
}

void CovSpec::ensure_factored() const {
    if (factored_) return;
    switch (kind_) {
        case Kind::Diagonal:
            if ((variances_.array() <= 0.0).any())
                throw NotPositiveDefiniteError(0);
            break;
        case Kind::Dense:
            dense_factor_ = chol_spd(dense_);
            break;
        case Kind::BlockDiag:
            block_factors_.clear();
            block_factors_.reserve(blocks_.size());
            for (const auto& b : blocks_) block_factors_.push_back(chol_spd(b));
            break;
    }
    factored_ = true;
}

Vector CovSpec::solve(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != dim_) throw DimensionError("CovSpec::solve: dimension mismatch");
    ensure_factored();
    switch (kind_) {
        case Kind::Diagonal:
            return x.array() / variances_.array();
        case Kind::Dense: {
            Vector y = dense_factor_.triangularView<Eigen::Lower>().solve(x);
            dense_factor_.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
            return y;
        }
        case Kind::BlockDiag: {
            Vector out(dim_);
            Index at = 0;
            for (const auto& l : block_factors_) {
                const Index m = l.rows();
                Vector y = l.triangularView<Eigen::Lower>().solve(x.segment(at, m));
                l.transpose().triangularView<Eigen::Upper>().solveInPlace(y);
                out.segment(at, m) = y;
                at += m;
            }
            return out;
        }
    }
    throw Error("CovSpec: unreachable");
}

double CovSpec::log_det() const {
    ensure_factored();
    switch (kind_) {
        case Kind::Diagonal:
            return variances_.array().log().sum();
        case Kind::Dense:
            return 2.0 * dense_factor_.diagonal().array().log().sum();
        case Kind::BlockDiag: {
            double out = 0.0;
            for (const auto& l : block_factors_) out += 2.0 * l.diagonal().array().log().sum();
            return out;
        }
    }
    throw Error("CovSpec: unreachable");
}

double CovSpec::quad_form_inv(const Eigen::Ref<const Vector>& x) const {
    return x.dot(solve(x));
}

void CovSpec::add_sampled_noise(SeededRng& rng, Eigen::Ref<Vector> row) const {
    if (row.size() != dim_) throw DimensionError("CovSpec::add_sampled_noise: dimension mismatch");
    ensure_factored();
    switch (kind_) {
        case Kind::Diagonal:
            for (Index j = 0; j < dim_; ++j) row(j) += std::sqrt(variances_(j)) * rng.normal();
            return;
        case Kind::Dense: {
            Vector g(dim_);
            for (Index j = 0; j < dim_; ++j) g(j) = rng.normal();
            row += dense_factor_.triangularView<Eigen::Lower>() * g;
            return;
        }
        case Kind::BlockDiag: {
            Index at = 0;
            for (const auto& l : block_factors_) {
                const Index m = l.rows();
                Vector g(m);
                for (Index j = 0; j < m; ++j) g(j) = rng.normal();
                row.segment(at, m) += l.triangularView<Eigen::Lower>() * g;
                at += m;
            }
            return;
        }
    }
    throw Error("CovSpec: unreachable");
}

double CovSpec::trace_product(const CovSpec& a, const CovSpec& b) {
    if (a.dim() != b.dim()) throw DimensionError("trace_product: dimension mismatch");
    // Order the cases so each pair is handled once.
    if (a.kind() == Kind::Dense || b.kind() == Kind::Dense) {
        const Matrix ma = a.materialize();
        const Matrix mb = b.materialize();
        return (ma.array() * mb.array()).sum();
    }
    if (a.kind() == Kind::Diagonal && b.kind() == Kind::Diagonal)
        return (a.variances_.array() * b.variances_.array()).sum();
    if (a.kind() == Kind::Diagonal && b.kind() == Kind::BlockDiag)
        return trace_product(b, a);
    if (a.kind() == Kind::BlockDiag && b.kind() == Kind::Diagonal) {
        double out = 0.0;
        Index at = 0;
        for (const auto& blk : a.blocks_) {
            out += (blk.diagonal().array() * b.variances_.segment(at, blk.rows()).array()).sum();
            at += blk.rows();
        }
        return out;
    }
    // BlockDiag x BlockDiag: partitions must line up.
    if (a.blocks_.size() != b.blocks_.size())
        throw DimensionError("trace_product: block partitions differ");
    double out = 0.0;
    for (std::size_t i = 0; i < a.blocks_.size(); ++i) {
        if (a.blocks_[i].rows() != b.blocks_[i].rows())
            throw DimensionError("trace_product: block partitions differ");
        out += (a.blocks_[i].array() * b.blocks_[i].array()).sum();
    }
    return out;
}

}  // namespace copo
