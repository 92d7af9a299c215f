#include <doctest.h>

#include "test_support.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/linalg.hpp"

using namespace tvnet;
using namespace tvnet::testing;

TEST_CASE("symmetric eigendecomposition reconstructs the input") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 2 + static_cast<Index>(rng.below(9));
        const Matrix a = random_psd(rng, n, 0.1) - Matrix::Identity(n, n);
        const SymEig e = sym_eig(a);
        for (Index i = 1; i < n; ++i) CHECK(e.values(i - 1) >= e.values(i));
        const Matrix back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK((back - a).norm() < 1e-10 * (1.0 + a.norm()));
        CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).norm() < 1e-10);
    }
}

TEST_CASE("asymmetric input is rejected") {
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    CHECK_THROWS_AS(sym_eig(a), InvalidInput);
}

TEST_CASE("cholesky factors SPD input and reports the failing pivot") {
    Rng rng(2);
    const Matrix a = random_psd(rng, 6, 0.5);
    const Matrix l = cholesky(a);
    CHECK((l * l.transpose() - a).norm() < 1e-12 * a.norm());
    for (Index i = 0; i < 6; ++i)
        for (Index j = i + 1; j < 6; ++j) CHECK(l(i, j) == 0.0);

    Matrix bad = Matrix::Identity(3, 3);
    bad(2, 2) = -1.0;
    try {
        cholesky(bad);
        FAIL("expected NotPositiveDefinite");
    } catch (const NotPositiveDefinite& e) {
        CHECK(e.pivot() == 2);
    }
}

TEST_CASE("thin svd returns the leading singular triplets") {
    Rng rng(3);
    const Matrix m = random_matrix(rng, 12, 5);
    const ThinSvd s = thin_svd(m, 3);
    CHECK(s.values.size() == 3);
    for (Index i = 0; i < 3; ++i) {
        CHECK((m * s.right.col(i) - s.values(i) * s.left.col(i)).norm() < 1e-10);
        if (i) CHECK(s.values(i - 1) >= s.values(i));
    }
    const Eigen::JacobiSVD<Matrix> full(m);
    for (Index i = 0; i < 3; ++i) CHECK(s.values(i) == doctest::Approx(full.singularValues()(i)));
}

TEST_CASE("random orthogonal matrices are orthogonal and seeded") {
    const Matrix q = random_orthogonal(7, 9);
    CHECK((q.transpose() * q - Matrix::Identity(7, 7)).norm() < 1e-12);
    CHECK((random_orthogonal(7, 9) - q).norm() == 0.0);
    CHECK((random_orthogonal(7, 10) - q).norm() > 0.1);
}
