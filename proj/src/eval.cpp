#include "tvnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tvnet/errors.hpp"
#include "tvnet/logistic.hpp"

namespace tvnet {

namespace {

Vector normalized_off_diagonal(const Matrix& m) {
    const Index n = m.rows();
    Vector v(n * (n - 1));
    Index p = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (i != j) v(p++) = m(i, j);
    if (v.size() == 0) throw DegenerateProblem("matrix_correlation: no off-diagonal entries");
    const double scale = v.cwiseAbs().maxCoeff();
    v.array() -= v.mean();
    const double norm = v.norm();
    if (!(norm > 1e-12 * scale) || norm == 0.0)
        throw DegenerateProblem("matrix_correlation: off-diagonal entries are constant");
    return v / norm;
}

} // namespace

double matrix_correlation(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw InvalidInput("matrix_correlation: matrices must be square and the same size");
    const double c = normalized_off_diagonal(a).dot(normalized_off_diagonal(b));
    return std::clamp(c, -1.0, 1.0);
}

SimilarityReport best_match_score(const BasisSet& learned, std::span<const Matrix> true_precisions,
                                  bool greedy_unique) {
    if (learned.k < 1) throw InvalidInput("best_match_score: empty learned set");
    const auto k_true = static_cast<Index>(true_precisions.size());
    if (k_true < 1) throw InvalidInput("best_match_score: no true structures");

    Matrix scores(k_true, learned.k);
    for (Index j = 0; j < k_true; ++j)
        for (Index i = 0; i < learned.k; ++i)
            scores(j, i) = matrix_correlation(learned.bases[i], true_precisions[j]);

    SimilarityReport report;
    report.per_true_basis.resize(static_cast<std::size_t>(k_true));
    if (!greedy_unique) {
        for (Index j = 0; j < k_true; ++j) {
            Index best = 0;
            scores.row(j).cwiseAbs().maxCoeff(&best);
            report.per_true_basis[j] = {j, best, scores(j, best)};
        }
    } else {
        if (learned.k < k_true)
            throw InvalidInput("best_match_score: unique matching needs k >= number of truths");
        std::vector<bool> used_true(k_true, false), used_learned(learned.k, false);
        for (Index round = 0; round < k_true; ++round) {
            double best = -1.0;
            Index bj = 0, bi = 0;
            for (Index j = 0; j < k_true; ++j)
                for (Index i = 0; i < learned.k; ++i)
                    if (!used_true[j] && !used_learned[i] && std::abs(scores(j, i)) > best) {
                        best = std::abs(scores(j, i));
                        bj = j;
                        bi = i;
                    }
            used_true[bj] = true;
            used_learned[bi] = true;
            report.per_true_basis[bj] = {bj, bi, scores(bj, bi)};
        }
    }
    double total = 0.0;
    for (const auto& m : report.per_true_basis) total += std::abs(m.score);
    report.mean_score = total / static_cast<double>(k_true);
    return report;
}

Vector pca_projection_features(const NetworkEstimate& estimate, const BasisSet& principal) {
    const Matrix& a = estimate.coefficients;
    if (a.rows() != principal.n || a.cols() != principal.n)
        throw InvalidInput("pca_projection_features: dimension mismatch");
    Matrix stacked(principal.n * (principal.n - 1) / 2, principal.k);
    for (Index i = 0; i < principal.k; ++i) stacked.col(i) = vec_upper(principal.bases[i]);
    const Matrix gram = stacked.transpose() * stacked;
    if ((gram - Matrix::Identity(principal.k, principal.k)).cwiseAbs().maxCoeff() > 1e-8)
        throw InvalidInput("pca_projection_features: principal set is not orthonormal");
    return stacked.transpose() * vec_upper(0.5 * (a + a.transpose()));
}

Vector raw_features(const NetworkEstimate& estimate) {
    const Matrix& a = estimate.coefficients;
    const Index n = a.rows();
    Vector v(n * (n - 1));
    Index p = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (i != j) v(p++) = a(i, j);
    return v;
}

LogisticModel train_logistic_l2(const Matrix& features, std::span<const int> labels, double ridge,
                                const LogisticModel* initial, double tol) {
    if (features.rows() < 2) throw InvalidInput("train_logistic_l2: need at least two rows");
    if (!(ridge >= 0.0)) throw InvalidInput("train_logistic_l2: ridge must be >= 0");
    if (static_cast<Index>(labels.size()) != features.rows())
        throw InvalidInput("train_logistic_l2: label count does not match rows");
    const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool has_neg = std::find(labels.begin(), labels.end(), -1) != labels.end();
    if (!has_pos || !has_neg) throw InvalidInput("train_logistic_l2: both classes must be present");

    const Index p = features.cols();
    Matrix augmented(features.rows(), p + 1);
    augmented.col(0).setOnes();
    augmented.rightCols(p) = features;
    Vector penalty = Vector::Constant(p + 1, ridge);
    penalty(0) = 0.0;

    Vector start;
    if (initial) {
        if (initial->weights.size() != p)
            throw InvalidInput("train_logistic_l2: initial weights have wrong length");
        start.resize(p + 1);
        start(0) = initial->intercept;
        start.tail(p) = initial->weights;
    }
    const LogisticFit fit = fit_logistic(augmented, labels, penalty, tol, initial ? &start : nullptr);
    LogisticModel model;
    model.intercept = fit.weights(0);
    model.weights = fit.weights.tail(p);
    model.gradient_norm = fit.gradient_norm;
    model.converged = fit.converged;
    return model;
}

double classification_error(const LogisticModel& model, const Matrix& features,
                            std::span<const int> labels) {
    if (static_cast<Index>(labels.size()) != features.rows())
        throw InvalidInput("classification_error: label count does not match rows");
    if (model.weights.size() != features.cols())
        throw InvalidInput("classification_error: feature width mismatch");
    if (labels.empty()) return 0.0;
    Index wrong = 0;
    for (Index i = 0; i < features.rows(); ++i) {
        const int predicted = model.score(features.row(i).transpose()) >= 0.0 ? 1 : -1;
        if (predicted != labels[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(features.rows());
}

Evidence accumulate_evidence(std::span<const double> scores, Index begin, Index end) {
    if (begin < 0 || end > static_cast<Index>(scores.size()) || begin >= end)
        throw InvalidInput("accumulate_evidence: window must be non-empty and inside the sequence");
    Evidence ev;
    double total = 0.0;
    for (Index t = begin; t < end; ++t) {
        total += scores[t];
        ev.trace.push_back(total);
    }
    ev.decision = total >= 0.0 ? 1 : -1;
    return ev;
}

FeatureScaler FeatureScaler::fit(const Matrix& features) {
    FeatureScaler s;
    s.mean = features.colwise().mean().transpose();
    s.scale.resize(features.cols());
    for (Index j = 0; j < features.cols(); ++j) {
        const double sd = std::sqrt((features.col(j).array() - s.mean(j)).square().mean());
        s.scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

Matrix FeatureScaler::apply(const Matrix& features) const {
    Matrix out = features.rowwise() - mean.transpose();
    return out * scale.cwiseInverse().asDiagonal();
}

} // namespace tvnet
