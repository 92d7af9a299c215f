#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/moments.hpp"
#include "tvnet/supervised.hpp"
#include "tvnet/synth.hpp"

using namespace tvnet;
using namespace tvnet::testing;

namespace {

BasisSet random_set(Rng& rng, Index n, Index k) {
    BasisSet b = BasisSet::zeros(n, k);
    for (auto& a : b.bases) a = 0.5 * random_symmetric_zero_diag(rng, n);
    return b;
}

ElasticNetConfig coding(double lambda, double alpha) {
    ElasticNetConfig c;
    c.lambda = lambda;
    c.alpha = alpha;
    c.tol = 1e-15;
    c.max_sweeps = 1000000;
    c.check_psd = false;
    return c;
}

std::vector<bool> support(const std::vector<Vector>& codes) {
    std::vector<bool> s;
    for (const auto& c : codes)
        for (Index j = 0; j < c.size(); ++j) s.push_back(std::abs(c(j)) > 1e-12);
    return s;
}

} // namespace

TEST_CASE("logistic loss and its code gradient") {
    LinearClassifier c{Vector::Zero(2), 0.0};
    const Vector code = Vector::Ones(2);
    CHECK(logistic_loss(c, code, 1) == doctest::Approx(std::log(2.0)));
    CHECK(supervised_code_gradient(c, code, 1).norm() == 0.0);

    c.omega << 1.0, 0.0;
    CHECK(logistic_loss(c, code, 1) == doctest::Approx(std::log1p(std::exp(-1.0))));
    c.omega << 1e3, 0.0;
    CHECK(logistic_loss(c, code, 1) < 1e-300 + 1e-12);

    c.omega << 0.4, -0.4;
    const Vector g = supervised_code_gradient(c, code, 1);
    CHECK((g + 0.5 * c.omega).norm() <= 1e-15);

    Rng rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        c.omega = random_vector(rng, 3);
        const Vector b = random_vector(rng, 3);
        const int y = rng.uniform() < 0.5 ? -1 : 1;
        const Vector grad = supervised_code_gradient(c, b, y);
        for (Index j = 0; j < 3; ++j) {
            const double h = 1e-6;
            Vector p = b, m = b;
            p(j) += h;
            m(j) -= h;
            const double fd = (logistic_loss(c, p, y) - logistic_loss(c, m, y)) / (2 * h);
            CHECK(std::abs(fd - grad(j)) <= 1e-8 * std::max(1.0, std::abs(grad(j))));
        }
    }
    CHECK_THROWS_AS(logistic_loss(c, Vector::Ones(3), 0), InvalidInput);
}

TEST_CASE("active-set system") {
    Rng rng(62);
    const Matrix d = random_matrix(rng, 5, 3);
    const Matrix gram = d.transpose() * d;
    Vector code(3);
    code << 0.7, 0.0, -0.2;
    const Vector g = random_vector(rng, 3);
    const Vector phi = active_set_direction(gram, code, g, 0.1);
    CHECK(phi(1) == 0.0);
    const std::vector<Index> act{0, 2};
    Matrix sys = gram(act, act);
    sys.diagonal().array() += 0.1;
    CHECK((sys * phi(act) - g(act)).norm() <= 1e-10);

    CHECK(active_set_direction(gram, Vector::Zero(3), g, 0.1).norm() == 0.0);

    Matrix collinear(4, 2);
    collinear.col(0) = random_vector(rng, 4);
    collinear.col(1) = collinear.col(0);
    CHECK_THROWS_AS(active_set_direction(collinear.transpose() * collinear, Vector::Ones(2),
                                         Vector::Ones(2), 0.0),
                    SingularSystem);
}

TEST_CASE("dictionary gradient matches finite differences through the re-solved code") {
    Rng rng(63);
    const double lambda = 0.2, alpha = 0.5;
    const double l2 = 0.5 * alpha * lambda;
    int checked = 0;
    while (checked < 10) {
        const Matrix d = random_matrix(rng, 3, 2);
        const Vector x = random_vector(rng, 3);
        const LinearClassifier c{random_vector(rng, 2), 0.0};
        const int y = rng.uniform() < 0.5 ? -1 : 1;
        auto solve = [&](const Matrix& dict) {
            const std::vector<Matrix> ds{dict};
            const std::vector<Vector> xs{x};
            const std::vector<double> w{1.0};
            return solve_elastic_net(build_weighted_problem(ds, xs, w), coding(lambda, alpha)).beta;
        };
        const Vector code = solve(d);
        if ((code.array().abs() > 1e-12).count() == 0) continue;
        const Matrix grad =
            supervised_dict_gradient(d, code, x, supervised_code_gradient(c, code, y), l2);

        const Matrix delta = random_matrix(rng, 3, 2);
        const double eps = 1e-5;
        const Vector cp = solve(d + eps * delta), cm = solve(d - eps * delta);
        bool stable = true;
        for (Index j = 0; j < 2; ++j)
            stable = stable && ((std::abs(cp(j)) > 1e-12) == (std::abs(code(j)) > 1e-12)) &&
                     ((std::abs(cm(j)) > 1e-12) == (std::abs(code(j)) > 1e-12));
        if (!stable) continue;
        const double fd = (logistic_loss(c, cp, y) - logistic_loss(c, cm, y)) / (2 * eps);
        const double an = (grad.array() * delta.array()).sum();
        CHECK(std::abs(fd - an) <= 1e-2 * std::max(std::abs(fd), 1e-8));
        ++checked;
    }

    const Matrix d = random_matrix(rng, 3, 2);
    CHECK(supervised_dict_gradient(d, Vector::Ones(2), Vector::Ones(3), Vector::Zero(2), l2).norm() ==
          0.0);
    CHECK(supervised_dict_gradient(d, Vector::Zero(2), Vector::Ones(3), Vector::Ones(2), l2).norm() ==
          0.0);
}

TEST_CASE("basis gradient matches finite differences in both gram modes") {
    Rng rng(64);
    const Index n = 3, k = 2, T = 5;
    const double lambda = 0.1, alpha = 0.5;
    const double l2 = 0.5 * alpha * lambda;
    const KernelSpec kernel{KernelFamily::gaussian, 1.5, 3.0, true};

    for (GramMode mode : {GramMode::single, GramMode::kernel_weighted}) {
        int checked = 0, attempts = 0;
        while (checked < 10 && attempts < 200) {
            ++attempts;
            const BasisSet b = random_set(rng, n, k);
            ObservationSequence x;
            x.data = random_matrix(rng, T, n);
            std::vector<Vector> rows;
            for (Index t = 0; t < T; ++t) rows.push_back(x.data.row(t).transpose());
            std::vector<Matrix> moments;
            if (mode == GramMode::single)
                for (const Vector& r : rows) moments.push_back(r * r.transpose());
            else
                moments = local_second_moments(x.data, kernel, Exec::serial);
            std::vector<int> labels;
            for (Index t = 0; t < T; ++t) labels.push_back(rng.uniform() < 0.5 ? -1 : 1);
            const LinearClassifier c{random_vector(rng, k), 0.0};

            auto codes_at = [&](const BasisSet& bs) {
                return infer_codes_from_moments(bs, moments, coding(lambda, alpha), nullptr,
                                                Exec::serial);
            };
            auto loss = [&](const std::vector<Vector>& codes) {
                double s = 0.0;
                for (Index t = 0; t < T; ++t) s += logistic_loss(c, codes[t], labels[t]);
                return s;
            };
            const auto codes = codes_at(b);
            const auto grad =
                supervised_basis_gradient(b, codes, labels, rows, moments, c, mode, l2, Exec::serial);

            BasisSet plus = b, minus = b;
            const double eps = 1e-5;
            std::vector<Matrix> delta;
            for (Index i = 0; i < k; ++i) {
                delta.push_back(random_symmetric_zero_diag(rng, n));
                plus.bases[i] += eps * delta.back();
                minus.bases[i] -= eps * delta.back();
            }
            const auto cp = codes_at(plus), cm = codes_at(minus);
            if (support(cp) != support(codes) || support(cm) != support(codes)) continue;
            const double fd = (loss(cp) - loss(cm)) / (2 * eps);
            double an = 0.0;
            for (Index i = 0; i < k; ++i) an += (grad[i].array() * delta[i].array()).sum();
            if (std::abs(fd) < 1e-6) continue;
            CHECK(std::abs(fd - an) <= 1e-2 * std::abs(fd));
            ++checked;
        }
        CHECK(checked == 10);
    }
}

TEST_CASE("mixing gradients") {
    Rng rng(65);
    std::vector<Matrix> u{random_symmetric_zero_diag(rng, 4)}, s{random_symmetric_zero_diag(rng, 4)};
    CHECK((combined_basis_gradient(u, s, 1.0)[0] - u[0]).norm() == 0.0);
    CHECK((combined_basis_gradient(u, s, 0.0)[0] - s[0]).norm() == 0.0);
    CHECK((combined_basis_gradient(u, s, 0.75)[0] - (0.75 * u[0] + 0.25 * s[0])).cwiseAbs().maxCoeff() <=
          1e-15);

    std::vector<Matrix> raw{random_matrix(rng, 4, 4)};
    const Matrix p = combined_basis_gradient(raw, raw, 0.5)[0];
    CHECK((p - p.transpose()).norm() == 0.0);
    CHECK(p.diagonal().norm() == 0.0);
    CHECK_THROWS_AS(combined_basis_gradient(u, s, 1.5), InvalidInput);
    std::vector<Matrix> wrong{Matrix::Zero(3, 3)};
    CHECK_THROWS_AS(combined_basis_gradient(u, wrong, 0.5), InvalidInput);
}

TEST_CASE("classifier refit") {
    Rng rng(66);
    std::vector<Vector> codes;
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) {
        Vector v = random_vector(rng, 2);
        const int y = v(0) + 0.5 * v(1) >= 0.0 ? 1 : -1;
        v += 0.3 * y * Vector::Ones(2).normalized().cwiseProduct(Vector::Constant(2, 1.0));
        codes.push_back(v);
        labels.push_back(v(0) + 0.5 * v(1) >= 0.0 ? 1 : -1);
    }
    const LinearClassifier c = refit_classifier(codes, labels, 1e-4, 1e-8);
    int wrong = 0;
    for (std::size_t i = 0; i < codes.size(); ++i)
        if ((c.decision(codes[i]) >= 0.0 ? 1 : -1) != labels[i]) ++wrong;
    CHECK(wrong == 0);
    CHECK(classifier_gradient(c, codes, labels).norm() <= 1e-8);
}

TEST_CASE("supervised fits") {
    Rng rng(67);
    const GroundTruth truth = make_ground_truth(4, 120, 4, 15.0, 5);
    ObservationSequence x = standardize(generate_sequence(truth));
    const std::vector<int>& labels = truth.labels;

    SupervisedConfig cfg;
    cfg.base.k = 3;
    cfg.base.lambda_beta = 0.05;
    cfg.base.alpha = 0.5;
    cfg.base.lambda_A = 0.05;
    cfg.base.kernel = KernelSpec{KernelFamily::gaussian, 4.0, 3.0, true};
    cfg.base.max_outer_iters = 15;
    cfg.base.seed = 2;
    const BasisSet init = random_bases(4, 3, 11);

    SUBCASE("gamma = 1 reproduces the unsupervised fit bitwise") {
        cfg.gamma = 1.0;
        const auto sup = fit_supervised(x, labels, cfg, init);
        const auto uns = fit(x, cfg.base, init);
        REQUIRE(sup.objective_trace.size() == uns.objective_trace.size());
        for (std::size_t i = 0; i < uns.objective_trace.size(); ++i)
            CHECK(sup.objective_trace[i] == uns.objective_trace[i]);
        for (Index i = 0; i < 3; ++i) CHECK((sup.bases.bases[i] - uns.bases.bases[i]).norm() == 0.0);
    }
    SUBCASE("mixed fits are deterministic and keep the constraints") {
        for (GramMode mode : {GramMode::single, GramMode::kernel_weighted}) {
            cfg.gamma = 0.75;
            cfg.gram_mode = mode;
            const auto a = fit_supervised(x, labels, cfg, init);
            cfg.base.exec = Exec::serial;
            const auto b = fit_supervised(x, labels, cfg, init);
            cfg.base.exec = Exec::parallel;
            for (Index i = 0; i < 3; ++i) {
                CHECK((a.bases.bases[i] - b.bases.bases[i]).norm() == 0.0);
                CHECK((a.bases.bases[i] - a.bases.bases[i].transpose()).norm() <= 1e-10);
                CHECK(a.bases.bases[i].diagonal().norm() == 0.0);
            }
            CHECK(a.classifier.omega.size() == 3);
            CHECK(a.codes.size() == 120);
        }
    }
    SUBCASE("label validation") {
        std::vector<int> bad(labels);
        bad[3] = 0;
        CHECK_THROWS_AS(fit_supervised(x, bad, cfg, init), InvalidInput);
        CHECK_THROWS_AS(fit_supervised(x, std::vector<int>(5, 1), cfg, init), InvalidInput);
    }
}
