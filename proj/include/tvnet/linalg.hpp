#pragma once
#include <cstdint>

#include "tvnet/types.hpp"

namespace tvnet {

struct SymEig {
    Vector values;  // descending
    Matrix vectors; // columns orthonormal, matching values
};

/// Eigendecomposition of a symmetric matrix. Throws InvalidInput when the
/// input is asymmetric beyond 1e-10 (relative to its largest entry).
SymEig sym_eig(const Matrix& m);

struct ThinSvd {
    Vector values; // nonnegative, descending
    Matrix left;   // m x k
    Matrix right;  // p x k
};

/// Top-k singular triplets of an m x p matrix.
ThinSvd thin_svd(const Matrix& m, Index k);

/// Lower-triangular L with L L^T = m. A pivot at or below 1e-12 times the
/// largest diagonal entry is treated as loss of definiteness and reported
/// through NotPositiveDefinite::pivot().
Matrix cholesky(const Matrix& m);

/// Haar-distributed orthogonal matrix: QR of a seeded Gaussian matrix with
/// the signs of R's diagonal folded into Q.
Matrix random_orthogonal(Index n, std::uint64_t seed);

double max_asymmetry(const Matrix& m);

} // namespace tvnet
