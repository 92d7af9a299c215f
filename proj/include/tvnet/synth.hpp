#pragma once
#include <cstdint>
#include <vector>

#include "tvnet/types.hpp"

namespace tvnet {

/// Generating process of a synthetic sequence: covariance at time t is
/// sum_i trajectories(t, i) * cov_bases[i].
struct GroundTruth {
    std::vector<Matrix> cov_bases;
    std::vector<Matrix> precision_bases;
    Matrix trajectories; // T x k_true, rows on the simplex
    std::vector<int> labels;
    std::uint64_t seed = 0;
    double smoothness = 0.0;

    Index dim() const { return cov_bases.empty() ? 0 : cov_bases.front().rows(); }
    Index length() const { return trajectories.rows(); }
    Index components() const { return static_cast<Index>(cov_bases.size()); }
    void validate() const;
};

/// round(2/3 * n(n-1)/2), the number of zeroed unordered off-diagonal pairs.
Index sparsified_pair_count(Index n);

/// Q diag(U(0,1)) Q^T with Q Haar-orthogonal, the smallest-magnitude two
/// thirds of the off-diagonal pairs zeroed, then the diagonal multiplied by
/// the smallest c >= 1 (bisection to 1e-6) giving a minimum eigenvalue >= 0.01.
Matrix random_sparse_covariance(Index n, std::uint64_t seed);

/// Seeded white noise per component, smoothed with a gaussian window of
/// standard deviation `smoothness` (rescaled to unit variance, gain 2), then
/// a softmax per time step. Per-step changes stay below 4 / smoothness.
Matrix smooth_simplex_trajectories(Index length, Index components, double smoothness,
                                   std::uint64_t seed);

/// y_t = +1 if a1 + a2 >= a3 + a4, else -1. Requires four components.
std::vector<int> make_labels(const Matrix& trajectories);

/// Full truth for one seed: k_true covariance bases, trajectories and, when
/// k_true == 4, labels.
GroundTruth make_ground_truth(Index n, Index length, Index k_true, double smoothness,
                              std::uint64_t seed);

/// x_t ~ N(0, Sigma_t) through the Cholesky factor of Sigma_t.
ObservationSequence generate_sequence(const GroundTruth& truth);

/// Column means removed; no variance scaling.
ObservationSequence standardize(const ObservationSequence& x);

struct Whitened {
    ObservationSequence data;
    Matrix transform; // symmetric V D^{-1/2} V^T
};

/// ZCA whitening from the (1/(T-1)) sample covariance. Throws RankDeficient
/// when an eigenvalue is <= 1e-12 times the largest.
Whitened whiten(const ObservationSequence& x);

Matrix sample_covariance(const Matrix& data);

} // namespace tvnet
