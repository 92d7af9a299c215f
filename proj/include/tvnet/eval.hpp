#pragma once
#include <span>
#include <vector>

#include "tvnet/basis.hpp"
#include "tvnet/keller.hpp"
#include "tvnet/types.hpp"

namespace tvnet {

/// Correlation of two structures: diagonals dropped, off-diagonal entries
/// centered and scaled to unit norm, then dotted. Throws DegenerateProblem
/// for a matrix whose off-diagonal entries are constant.
double matrix_correlation(const Matrix& a, const Matrix& b);

struct BasisMatch {
    Index true_index = 0;
    Index learned_index = 0;
    double score = 0.0; // signed correlation of the chosen pair
};

struct SimilarityReport {
    std::vector<BasisMatch> per_true_basis;
    double mean_score = 0.0; // mean of |score|
};

/// Best learned basis (largest |matrix_correlation|) for every true precision.
/// Matching is with replacement unless `greedy_unique` is set, in which case
/// pairs are taken greedily by decreasing |score| without reusing a basis.
SimilarityReport best_match_score(const BasisSet& learned, std::span<const Matrix> true_precisions,
                                  bool greedy_unique = false);

/// <vec_upper(sym(estimate)), vec_upper(basis_i)> for every principal basis.
/// The principal set must be orthonormal in vec_upper form (checked to 1e-8).
Vector pca_projection_features(const NetworkEstimate& estimate, const BasisSet& principal);

/// Off-diagonal coefficients in row-major order, n(n-1) entries.
Vector raw_features(const NetworkEstimate& estimate);

struct LogisticModel {
    Vector weights;
    double intercept = 0.0;
    double gradient_norm = 0.0;
    bool converged = false;

    double score(const Vector& features) const { return weights.dot(features) + intercept; }
};

/// l2-regularized logistic regression with an unpenalized intercept:
///   mean deviance + ridge/2 |w|^2.
LogisticModel train_logistic_l2(const Matrix& features, std::span<const int> labels, double ridge,
                                const LogisticModel* initial = nullptr, double tol = 1e-8);

/// Fraction of sign mismatches; a zero score counts as +1.
double classification_error(const LogisticModel& model, const Matrix& features,
                            std::span<const int> labels);

struct Evidence {
    int decision = 1;
    std::vector<double> trace; // running sums over the window
};

/// Sum of scores over [begin, end); decision is the sign of the total with
/// sign(0) = +1.
Evidence accumulate_evidence(std::span<const double> scores, Index begin, Index end);

/// Column means and standard deviations of a training feature matrix, used to
/// put train and test features on the same scale.
struct FeatureScaler {
    Vector mean;
    Vector scale;

    static FeatureScaler fit(const Matrix& features);
    Matrix apply(const Matrix& features) const;
};

} // namespace tvnet
