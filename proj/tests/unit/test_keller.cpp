#include <doctest.h>

#include "test_support.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/keller.hpp"
#include "tvnet/moments.hpp"
#include "tvnet/synth.hpp"

using namespace tvnet;
using namespace tvnet::testing;

namespace {

ObservationSequence noise(Rng& rng, Index t, Index n) {
    ObservationSequence x;
    x.data = random_matrix(rng, t, n);
    return standardize(x);
}

const KernelSpec kernel{KernelFamily::gaussian, 3.0, 3.0, true};

} // namespace

TEST_CASE("lambda above every row's null threshold gives the zero structure") {
    Rng rng(31);
    const ObservationSequence x = noise(rng, 40, 5);
    const Index t = 20;
    const std::vector<Index> target{t};
    const Matrix s = local_second_moments(x.data, target, kernel).front();
    double lmax = 0.0;
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j)
            if (i != j) lmax = std::max(lmax, 2.0 * std::abs(s(i, j)));
    CHECK(estimate_structure_at(x, t, kernel, 1.01 * lmax).coefficients.norm() == 0.0);
    CHECK(estimate_structure_at(x, t, kernel, 0.9 * lmax).coefficients.norm() > 0.0);
}

TEST_CASE("two identical columns regress positively on each other") {
    Rng rng(32);
    ObservationSequence x;
    x.data.resize(30, 2);
    x.data.col(0) = random_vector(rng, 30);
    x.data.col(1) = x.data.col(0);
    x = standardize(x);
    const auto e = estimate_structure_at(x, 15, kernel, 1e-3);
    CHECK(e.coefficients(0, 1) > 0.0);
    CHECK(e.coefficients(1, 0) > 0.0);
    CHECK(e.coefficients(0, 0) == 0.0);
    CHECK(e.coefficients(1, 1) == 0.0);
}

TEST_CASE("fit_sequence agrees with per-call estimates, serially and in parallel") {
    Rng rng(33);
    const ObservationSequence x = noise(rng, 20, 4);
    const auto times = all_times(20);
    const auto par = fit_sequence(x, kernel, 0.05, times, Exec::parallel);
    const auto ser = fit_sequence(x, kernel, 0.05, times, Exec::serial);
    REQUIRE(par.size() == 20);
    for (Index t = 0; t < 20; ++t) {
        const auto single = estimate_structure_at(x, t, kernel, 0.05);
        CHECK(par[t].time == t);
        CHECK((par[t].coefficients - single.coefficients).norm() == 0.0);
        CHECK((ser[t].coefficients - par[t].coefficients).norm() == 0.0);
        CHECK(par[t].coefficients.diagonal().norm() == 0.0);
    }
    CHECK(fit_sequence(x, kernel, 0.05, std::vector<Index>{}).empty());
}

TEST_CASE("moment route matches row lassos on the raw window") {
    Rng rng(34);
    const ObservationSequence x = noise(rng, 25, 5);
    for (Index t : {0, 7, 24}) {
        const auto fast = estimate_structure_at(x, t, kernel, 0.02, {1e-12, 100000});
        const auto slow = reference::estimate_structure_at(x, t, kernel, 0.02, {1e-12, 100000});
        CHECK((fast.coefficients - slow.coefficients).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("unstandardized input is flagged") {
    Rng rng(35);
    ObservationSequence x;
    x.data = random_matrix(rng, 20, 3).array() + 5.0;
    CHECK(estimate_structure_at(x, 3, kernel, 0.1).not_standardized);
    CHECK_FALSE(estimate_structure_at(standardize(x), 3, kernel, 0.1).not_standardized);
    CHECK_THROWS_AS(estimate_structure_at(x, 20, kernel, 0.1), InvalidInput);
}

TEST_CASE("edge symmetrization uses the OR rule") {
    NetworkEstimate e;
    e.coefficients = Matrix::Zero(3, 3);
    CHECK(symmetrize_edges(e).size() == 0);
    e.coefficients(0, 1) = 0.5;
    const EdgeSet s = symmetrize_edges(e);
    CHECK(s.size() == 1);
    CHECK(s.contains(0, 1));
    CHECK(s.contains(1, 0));
    CHECK(symmetrize_edges(e, 0.6).size() == 0);
}

TEST_CASE("partial correlations from a precision matrix") {
    CHECK(precision_to_partial_corr(Matrix::Identity(4, 4)).isIdentity());
    Matrix p(2, 2);
    p << 2, -1, -1, 2;
    CHECK(precision_to_partial_corr(p)(0, 1) == doctest::Approx(0.5));

    Rng rng(36);
    const Matrix q = random_psd(rng, 6, 0.2);
    const Matrix r = precision_to_partial_corr(q);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(r.cwiseAbs().maxCoeff() <= 1.0);

    Matrix bad = Matrix::Identity(2, 2);
    bad(1, 1) = -1;
    CHECK_THROWS_AS(precision_to_partial_corr(bad), InvalidInput);
}

TEST_CASE("regression coefficients to partial correlation") {
    CHECK(regression_to_partial_corr(0.25, 0.25).value == doctest::Approx(0.25));
    CHECK(regression_to_partial_corr(0.0, 0.7).value == 0.0);
    const auto m = regression_to_partial_corr(0.3, -0.3);
    CHECK(m.value == 0.0);
    CHECK(m.sign_mismatch);
    CHECK(regression_to_partial_corr(-0.2, -0.8).value == doctest::Approx(-0.4));
}

TEST_CASE("population round trip through regression coefficients") {
    Rng rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 2 + static_cast<Index>(rng.below(9));
        const Matrix p = random_psd(rng, n, 0.1);
        const Matrix rho = precision_to_partial_corr(p);
        const Matrix reg = precision_to_regression(p);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const auto pc = regression_to_partial_corr(reg(i, j), reg(j, i));
                CHECK_FALSE(pc.sign_mismatch);
                CHECK(std::abs(pc.value - rho(i, j)) <= 1e-10);
            }
    }
}
