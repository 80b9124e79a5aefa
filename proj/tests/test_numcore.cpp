#include "copo/numcore.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace copo;
using testutil::random_matrix;
using testutil::random_orthogonal;
using testutil::random_spd;
using testutil::random_symmetric;

TEST_CASE("hollow zeros the diagonal and nothing else") {
    Matrix one(1, 1);
    one << 0.0;
    CHECK(hollow(one)(0, 0) == 0.0);

    CHECK(hollow(Matrix::Identity(2, 2)).isZero(0.0));

    Matrix s(2, 2);
    s << 5, 11, 11, 25;
    Matrix expected(2, 2);
    expected << 0, 11, 11, 0;
    CHECK(hollow(s) == expected);

    CHECK_THROWS_AS(hollow(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("hollow is idempotent and keeps off-diagonals bit-exactly") {
    SeededRng rng(11, 0);
    const Matrix s = random_symmetric(rng, 7);
    const Matrix h1 = hollow(s);
    const Matrix h2 = hollow(h1);
    CHECK(h1 == h2);
    for (Index i = 0; i < 7; ++i)
        for (Index j = 0; j < 7; ++j) {
            if (i == j) continue;
            CHECK(h1(i, j) == s(i, j));
        }
    CHECK((h1 - h1.transpose()).norm() == 0.0);
}

TEST_CASE("hollowed Gram is invariant to right rotation up to 1e-10") {
    SeededRng rng(12, 0);
    const Matrix y = random_matrix(rng, 6, 9);
    const Matrix q = random_orthogonal(rng, 9);
    const Matrix yq = y * q;
    const Matrix a = hollow(Matrix(y * y.transpose()));
    const Matrix b = hollow(Matrix(yq * yq.transpose()));
    CHECK((a - b).norm() <= 1e-10 * (1.0 + a.norm()));
}

TEST_CASE("top_k_eigs on small closed-form cases") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    const auto spec = top_k_eigs(d, 1);
    CHECK(spec.eigenvalues(0) == doctest::Approx(3.0));
    CHECK(spec.eigenvectors(0, 0) == doctest::Approx(1.0));
    CHECK(spec.eigenvectors(1, 0) == doctest::Approx(0.0));

    Matrix r(2, 2);
    r << 0, 1, 1, 0;
    const auto spec2 = top_k_eigs(r, 2);
    CHECK(spec2.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(spec2.eigenvalues(1) == doctest::Approx(-1.0));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(spec2.eigenvectors(0, 0) == doctest::Approx(inv_sqrt2));
    CHECK(spec2.eigenvectors(1, 0) == doctest::Approx(inv_sqrt2));
    CHECK(spec2.eigenvectors(0, 1) == doctest::Approx(inv_sqrt2));
    CHECK(spec2.eigenvectors(1, 1) == doctest::Approx(-inv_sqrt2));
}

TEST_CASE("top_k_eigs matches a full reference decomposition") {
    SeededRng rng(13, 0);
    const Matrix s = random_symmetric(rng, 5);
    const auto spec = top_k_eigs(s, 3);

    Eigen::SelfAdjointEigenSolver<Matrix> ref(s);
    for (Index j = 0; j < 3; ++j) {
        CHECK(spec.eigenvalues(j) == doctest::Approx(ref.eigenvalues()(4 - j)).epsilon(1e-8));
        // Compare up to sign through the projector.
        const Vector v = spec.eigenvectors.col(j);
        const Vector w = ref.eigenvectors().col(4 - j);
        CHECK(std::abs(std::abs(v.dot(w)) - 1.0) < 1e-8);
    }
}

TEST_CASE("top_k_eigs invariants: orthonormal, small residual, reconstruction") {
    SeededRng rng(14, 0);
    const Matrix s = random_symmetric(rng, 8);
    const auto spec = top_k_eigs(s, 8);
    const Matrix vtv = spec.eigenvectors.transpose() * spec.eigenvectors;
    CHECK((vtv - Matrix::Identity(8, 8)).norm() <= 1e-8);
    for (Index j = 0; j < 8; ++j) {
        const Vector resid = s * spec.eigenvectors.col(j) - spec.eigenvalues(j) * spec.eigenvectors.col(j);
        CHECK(resid.norm() <= 1e-8 * (1.0 + s.norm()));
    }
    const Matrix recon =
        spec.eigenvectors * spec.eigenvalues.asDiagonal() * spec.eigenvectors.transpose();
    CHECK((recon - s).norm() <= 1e-7 * s.norm());
}

TEST_CASE("top_k_eigs rejects bad inputs") {
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    CHECK_THROWS_AS(top_k_eigs(a, 1), ContractError);
    CHECK_THROWS_AS(top_k_eigs(Matrix::Identity(3, 3), 0), DimensionError);
    CHECK_THROWS_AS(top_k_eigs(Matrix::Identity(3, 3), 4), DimensionError);
}

TEST_CASE("degenerate eigenspaces agree via projectors") {
    // Eigenvalues (2, 1, 1): the basis inside the repeated eigenvalue is
    // arbitrary but the spanned subspace is not.
    SeededRng rng(15, 0);
    const Matrix q = random_orthogonal(rng, 3);
    Vector lam(3);
    lam << 2.0, 1.0, 1.0;
    const Matrix s = q * lam.asDiagonal() * q.transpose();
    const auto spec = top_k_eigs(s, 3);
    const Matrix sub = spec.eigenvectors.rightCols(2);
    const Matrix proj = sub * sub.transpose();
    const Matrix ref_sub = q.rightCols(2);
    const Matrix ref_proj = ref_sub * ref_sub.transpose();
    CHECK((proj - ref_proj).norm() <= 1e-8);
}

TEST_CASE("chol_spd hand cases and failure pivot") {
    CHECK((chol_spd(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm() == 0.0);

    Matrix s(2, 2);
    s << 4, 2, 2, 5;
    Matrix expected(2, 2);
    expected << 2, 0, 1, 2;
    CHECK((chol_spd(s) - expected).norm() <= 1e-14);

    Matrix bad(2, 2);
    bad << 1, 2, 2, 1;  // second pivot is negative
    try {
        chol_spd(bad);
        CHECK(false);
    } catch (const NotPositiveDefiniteError& e) {
        CHECK(e.pivot == 1);
    }
}

TEST_CASE("chol_spd reconstructs a random SPD matrix") {
    SeededRng rng(16, 0);
    const Matrix s = random_spd(rng, 6);
    const Matrix l = chol_spd(s);
    CHECK((l * l.transpose() - s).norm() <= 1e-10 * s.norm());
    CHECK(l.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().isZero(0.0));
}

TEST_CASE("spd_solve examples and multiply-back oracle") {
    Matrix b(2, 2);
    b << 1, 2, 3, 4;
    CHECK((spd_solve(Matrix::Identity(2, 2), b) - b).norm() == 0.0);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 4.0;
    Vector rhs(2);
    rhs << 2, 8;
    const Matrix x = spd_solve(d, rhs);
    CHECK(x(0, 0) == doctest::Approx(1.0));
    CHECK(x(1, 0) == doctest::Approx(2.0));

    SeededRng rng(17, 0);
    const Matrix s = random_spd(rng, 9);
    const Matrix b2 = random_matrix(rng, 9, 3);
    const Matrix x2 = spd_solve(s, b2);
    CHECK((s * x2 - b2).norm() <= 1e-9 * (1.0 + b2.norm()));
}

TEST_CASE("log_det_spd examples and eigenvalue-product oracle") {
    CHECK(log_det_spd(Matrix::Identity(5, 5)) == doctest::Approx(0.0));

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = std::exp(1.0);
    d(1, 1) = std::exp(2.0);
    CHECK(log_det_spd(d) == doctest::Approx(3.0));

    SeededRng rng(18, 0);
    const Matrix s = random_spd(rng, 7);
    Eigen::SelfAdjointEigenSolver<Matrix> ref(s);
    const double oracle = ref.eigenvalues().array().log().sum();
    CHECK(log_det_spd(s) == doctest::Approx(oracle).epsilon(1e-10));
}
