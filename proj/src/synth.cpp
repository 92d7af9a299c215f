#include "tvnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tvnet/errors.hpp"
#include "tvnet/linalg.hpp"
#include "tvnet/rng.hpp"

namespace tvnet {

namespace {

constexpr double kMinEigenvalue = 0.01;
constexpr double kTrajectoryGain = 2.0;

double min_eigenvalue(const Matrix& m) { return sym_eig(m).values.minCoeff(); }

} // namespace

Index sparsified_pair_count(Index n) { return (2 * n * (n - 1) + 3) / 6; }

Matrix random_sparse_covariance(Index n, std::uint64_t seed) {
    if (n < 2) throw InvalidInput("random_sparse_covariance: n must be >= 2");
    const Matrix q = random_orthogonal(n, Rng::derive(seed, 1));
    Rng rng(Rng::derive(seed, 2));
    Vector eig(n);
    for (Index i = 0; i < n; ++i) eig(i) = rng.uniform_open();

    Matrix sigma = q * eig.asDiagonal() * q.transpose();
    sigma = 0.5 * (sigma + sigma.transpose()).eval();

    struct Pair {
        Index i, j;
        double mag;
    };
    std::vector<Pair> pairs;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) pairs.push_back({i, j, std::abs(sigma(i, j))});
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const Pair& a, const Pair& b) { return a.mag < b.mag; });
    const Index drop = sparsified_pair_count(n);
    for (Index p = 0; p < drop; ++p) {
        sigma(pairs[p].i, pairs[p].j) = 0.0;
        sigma(pairs[p].j, pairs[p].i) = 0.0;
    }

    const Vector diag = sigma.diagonal();
    auto scaled = [&](double c) {
        Matrix m = sigma;
        m.diagonal() = c * diag;
        return m;
    };
    if (min_eigenvalue(sigma) >= kMinEigenvalue) return sigma;

    double lo = 1.0, hi = 2.0;
    while (min_eigenvalue(scaled(hi)) < kMinEigenvalue) {
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        if (min_eigenvalue(scaled(mid)) >= kMinEigenvalue)
            hi = mid;
        else
            lo = mid;
    }
    return scaled(hi);
}

Matrix smooth_simplex_trajectories(Index length, Index components, double smoothness,
                                   std::uint64_t seed) {
    if (length < 1) throw InvalidInput("trajectories: length must be >= 1");
    if (components < 2) throw InvalidInput("trajectories: need at least two components");
    if (!(smoothness > 0.0)) throw InvalidInput("trajectories: smoothness must be > 0");

    const auto radius = static_cast<Index>(std::ceil(4.0 * smoothness));
    Vector window(2 * radius + 1);
    for (Index j = -radius; j <= radius; ++j) {
        const double u = static_cast<double>(j) / smoothness;
        window(j + radius) = std::exp(-0.5 * u * u);
    }
    window /= window.norm(); // unit variance for unit-variance noise

    Matrix z(length, components);
    for (Index c = 0; c < components; ++c) {
        Rng rng(Rng::derive(seed, 100 + static_cast<std::uint64_t>(c)));
        Vector noise(length + 2 * radius);
        for (Index i = 0; i < noise.size(); ++i) noise(i) = rng.normal();
        for (Index t = 0; t < length; ++t)
            z(t, c) = kTrajectoryGain * window.dot(noise.segment(t, 2 * radius + 1));
    }

    Matrix alpha(length, components);
    for (Index t = 0; t < length; ++t) {
        const double top = z.row(t).maxCoeff();
        const auto e = (z.row(t).array() - top).exp();
        alpha.row(t) = e / e.sum();
    }
    return alpha;
}

std::vector<int> make_labels(const Matrix& trajectories) {
    if (trajectories.cols() != 4) throw InvalidInput("make_labels: need exactly four components");
    std::vector<int> y(static_cast<std::size_t>(trajectories.rows()));
    for (Index t = 0; t < trajectories.rows(); ++t) {
        const auto a = trajectories.row(t);
        y[t] = a(0) + a(1) >= a(2) + a(3) ? 1 : -1;
    }
    return y;
}

void GroundTruth::validate() const {
    if (cov_bases.empty()) throw InvalidInput("ground truth: no covariance bases");
    if (trajectories.cols() != components())
        throw InvalidInput("ground truth: trajectory width does not match basis count");
    for (const Matrix& s : cov_bases) {
        if (s.rows() != dim() || s.cols() != dim())
            throw InvalidInput("ground truth: covariance bases differ in shape");
        if (max_asymmetry(s) > 1e-10) throw InvalidInput("ground truth: asymmetric covariance");
        if (!(min_eigenvalue(s) > 0.0))
            throw InvalidInput("ground truth: covariance basis is not positive definite");
    }
    for (Index t = 0; t < trajectories.rows(); ++t) {
        const auto a = trajectories.row(t);
        if ((a.array() < 0.0).any() || (a.array() > 1.0).any() || std::abs(a.sum() - 1.0) > 1e-12)
            throw InvalidInput("ground truth: trajectory row " + std::to_string(t) +
                               " is off the simplex");
    }
    if (!labels.empty() && static_cast<Index>(labels.size()) != length())
        throw InvalidInput("ground truth: label count does not match length");
}

GroundTruth make_ground_truth(Index n, Index length, Index k_true, double smoothness,
                              std::uint64_t seed) {
    GroundTruth truth;
    truth.seed = seed;
    truth.smoothness = smoothness;
    for (Index i = 0; i < k_true; ++i) {
        Matrix s = random_sparse_covariance(n, Rng::derive(seed, 10 + static_cast<std::uint64_t>(i)));
        truth.precision_bases.push_back(s.inverse());
        truth.cov_bases.push_back(std::move(s));
    }
    truth.trajectories = smooth_simplex_trajectories(length, k_true, smoothness, Rng::derive(seed, 20));
    if (k_true == 4) truth.labels = make_labels(truth.trajectories);
    return truth;
}

ObservationSequence generate_sequence(const GroundTruth& truth) {
    truth.validate();
    const Index n = truth.dim();
    const Index length = truth.length();
    Rng rng(Rng::derive(truth.seed, 30));

    ObservationSequence x;
    x.data.resize(length, n);
    x.labels = truth.labels;
    for (Index t = 0; t < length; ++t) {
        Matrix sigma = Matrix::Zero(n, n);
        for (Index i = 0; i < truth.components(); ++i)
            sigma += truth.trajectories(t, i) * truth.cov_bases[i];
        Matrix l;
        try {
            l = cholesky(sigma);
        } catch (const NotPositiveDefinite& e) {
            throw Error(std::string("generate_sequence: mixed covariance lost definiteness: ") +
                        e.what());
        }
        Vector z(n);
        for (Index i = 0; i < n; ++i) z(i) = rng.normal();
        x.data.row(t) = (l * z).transpose();
    }
    return x;
}

ObservationSequence standardize(const ObservationSequence& x) {
    if (x.length() < 1) throw InvalidInput("standardize: empty sequence");
    ObservationSequence out = x;
    out.data.rowwise() -= x.data.colwise().mean();
    return out;
}

Matrix sample_covariance(const Matrix& data) {
    if (data.rows() < 2) throw InvalidInput("sample_covariance: need at least two rows");
    const Matrix centered = data.rowwise() - data.colwise().mean();
    Matrix c = centered.transpose() * centered / static_cast<double>(data.rows() - 1);
    return 0.5 * (c + c.transpose());
}

Whitened whiten(const ObservationSequence& x) {
    if (x.length() <= x.dim())
        throw RankDeficient("whiten: need more observations than dimensions", 0.0);
    const SymEig eig = sym_eig(sample_covariance(x.data));
    const double top = eig.values(0);
    for (Index i = 0; i < eig.values.size(); ++i)
        if (!(eig.values(i) > 1e-12 * top))
            throw RankDeficient("whiten: covariance eigenvalue " + std::to_string(eig.values(i)) +
                                    " (index " + std::to_string(i) + ") is not positive",
                                eig.values(i));

    Matrix w = eig.vectors * eig.values.cwiseSqrt().cwiseInverse().asDiagonal() *
               eig.vectors.transpose();
    w = 0.5 * (w + w.transpose()).eval();
    Whitened out{x, w};
    out.data.data = x.data * w;
    return out;
}

} // namespace tvnet
