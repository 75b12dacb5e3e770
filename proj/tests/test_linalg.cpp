#include "groupreduce/linalg.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace groupreduce;
using testutil::JacobiSvd;
using testutil::random_matrix;

TEST_CASE("identity decomposes into unit singular values") {
    const Matrix I = Matrix::Identity(3, 3);
    const SvdResult r = svd_truncated(I, 3);
    for (Index i = 0; i < 3; ++i) {
        CHECK(r.S(i) == doctest::Approx(1.0));
    }
    const Matrix recon = r.U * r.S.asDiagonal() * r.V.transpose();
    CHECK(frobenius_error(I, recon) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("a rank-one outer product is recovered exactly at k=1") {
    Vector x(5), y(4);
    x << 1.0, -2.0, 0.5, 3.0, -1.5;
    y << 2.0, 0.5, -1.0, 4.0;
    const Matrix A = x * y.transpose();
    const SvdResult r = svd_truncated(A, 1);
    CHECK(r.S(0) == doctest::Approx(x.norm() * y.norm()).epsilon(1e-12));
    CHECK(frobenius_error(A, r.U * r.S.asDiagonal() * r.V.transpose()) ==
          doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("truncation error equals the dropped singular energy") {
    const Matrix A = random_matrix(5, 4, 11);
    const JacobiSvd oracle(A);
    const SvdResult r = svd_truncated(A, 2);
    const double err = frobenius_error(A, r.U * r.S.asDiagonal() * r.V.transpose());
    CHECK(err * err == doctest::Approx(oracle.tail_energy(2)).epsilon(1e-8));
}

TEST_CASE("truncation agrees with an independent decomposition across shapes") {
    const Index shapes[][2] = {{8, 3}, {3, 8}, {20, 20}, {40, 7}};
    std::uint64_t seed = 100;
    for (const auto& s : shapes) {
        const Matrix A = random_matrix(s[0], s[1], seed++);
        const JacobiSvd oracle(A);
        const Index kmax = std::min(s[0], s[1]);
        for (Index k = 1; k <= kmax; ++k) {
            const SvdResult r = svd_truncated(A, k);
            const double err = frobenius_error(A, r.U * r.S.asDiagonal() * r.V.transpose());
            const double oracle_err = frobenius_error(A, oracle.reconstruction(k));
            CHECK(err == doctest::Approx(oracle_err).epsilon(1e-8));
            for (Index i = 0; i < k; ++i) {
                CHECK(r.S(i) == doctest::Approx(oracle.S(i)).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("factors keep orthonormal columns and ordered singular values") {
    const Matrix A = random_matrix(12, 7, 3);
    const SvdResult r = svd_truncated(A, 5);
    const Matrix utu = r.U.transpose() * r.U;
    const Matrix vtv = r.V.transpose() * r.V;
    CHECK((utu - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((vtv - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
    for (Index i = 1; i < 5; ++i) {
        CHECK(r.S(i) <= r.S(i - 1));
        CHECK(r.S(i) >= 0.0);
    }
}

TEST_CASE("sign convention pins each basis column deterministically") {
    const Matrix A = random_matrix(9, 6, 17);
    const SvdResult a = svd_truncated(A, 4);
    for (Index j = 0; j < 4; ++j) {
        Index best = 0;
        for (Index i = 1; i < a.V.rows(); ++i) {
            if (std::abs(a.V(i, j)) > std::abs(a.V(best, j))) {
                best = i;
            }
        }
        CHECK(a.V(best, j) > 0.0);
    }
    const SvdResult b = svd_truncated(A, 4);
    CHECK(a.U == b.U);
    CHECK(a.S == b.S);
    CHECK(a.V == b.V);
}

TEST_CASE("rank bounds and non-finite inputs are rejected") {
    const Matrix A = random_matrix(4, 3, 5);
    CHECK_THROWS_AS(svd_truncated(A, 0), std::invalid_argument);
    CHECK_THROWS_AS(svd_truncated(A, 4), std::invalid_argument);
    Matrix bad = A;
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(svd_truncated(bad, 1), std::invalid_argument);
    bad(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(svd_truncated(bad, 1), std::invalid_argument);
}

TEST_CASE("error is non-increasing in rank and vanishes at full rank") {
    const Matrix A = random_matrix(10, 6, 23);
    double prev = std::numeric_limits<double>::infinity();
    for (Index k = 1; k <= 6; ++k) {
        const SvdResult r = svd_truncated(A, k);
        const double err = frobenius_error(A, r.U * r.S.asDiagonal() * r.V.transpose());
        CHECK(err <= prev + 1e-12);
        prev = err;
    }
    CHECK(prev <= 1e-6 * A.norm());
}

TEST_CASE("squared singular values sum to the squared Frobenius norm") {
    const Matrix A = random_matrix(14, 9, 29);
    const SvdResult r = svd_truncated(A, 9);
    CHECK(r.S.squaredNorm() == doctest::Approx(A.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("frobenius_error handles the identical and constant cases") {
    const Matrix A = random_matrix(4, 4, 31);
    CHECK(frobenius_error(A, A) == 0.0);
    CHECK(frobenius_error(Matrix::Zero(2, 2), Matrix::Ones(2, 2)) == doctest::Approx(2.0));
}

TEST_CASE("frobenius_error matches elementwise summation") {
    const Matrix A = random_matrix(6, 3, 37);
    const Matrix B = random_matrix(6, 3, 41);
    double sum = 0.0;
    for (Index i = 0; i < 6; ++i) {
        for (Index j = 0; j < 3; ++j) {
            sum += (A(i, j) - B(i, j)) * (A(i, j) - B(i, j));
        }
    }
    CHECK(frobenius_error(A, B) == doctest::Approx(std::sqrt(sum)).epsilon(1e-12));
    CHECK_THROWS_AS(frobenius_error(A, Matrix::Zero(3, 6)), std::invalid_argument);
}

TEST_CASE("projection residual is zero inside the span") {
    const SvdResult r = svd_truncated(random_matrix(8, 5, 43), 3);
    Vector z(3);
    z << 1.0, -2.0, 0.5;
    const Vector a = r.V * z;
    CHECK(project_residual(a, r.V) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("projection residual of an orthogonal vector is its norm") {
    const SvdResult r = svd_truncated(random_matrix(8, 5, 47), 3);
    const Vector w = random_matrix(5, 1, 53).col(0);
    const Vector a = w - r.V * (r.V.transpose() * w);  // orthogonal component
    CHECK(project_residual(a, r.V) == doctest::Approx(a.norm()).epsilon(1e-10));
}

TEST_CASE("projection residual matches direct arithmetic and Pythagoras") {
    const SvdResult r = svd_truncated(random_matrix(10, 6, 59), 4);
    const Vector a = random_matrix(6, 1, 61).col(0);
    const Vector direct = a - r.V * (r.V.transpose() * a);
    const double res = project_residual(a, r.V);
    CHECK(res == doctest::Approx(direct.norm()).epsilon(1e-12));
    const double proj2 = (r.V * (r.V.transpose() * a)).squaredNorm();
    CHECK(res * res + proj2 == doctest::Approx(a.squaredNorm()).epsilon(1e-10));
    CHECK(res <= a.norm() + 1e-12);
    CHECK_THROWS_AS(project_residual(random_matrix(5, 1, 67).col(0), r.V),
                    std::invalid_argument);
}
