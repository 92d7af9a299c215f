#include "tvnet/linalg.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "tvnet/errors.hpp"
#include "tvnet/rng.hpp"

namespace tvnet {

double max_asymmetry(const Matrix& m) {
    if (m.rows() != m.cols()) return INFINITY;
    double worst = 0.0;
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = i + 1; j < m.cols(); ++j)
            worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
    return worst;
}

SymEig sym_eig(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidInput("sym_eig: matrix is not square");
    if (!m.allFinite()) throw InvalidInput("sym_eig: non-finite entry");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (max_asymmetry(m) > 1e-10 * scale) throw InvalidInput("sym_eig: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) throw DegenerateProblem("sym_eig: eigensolver failed");

    // Eigen returns ascending order.
    const Index n = m.rows();
    SymEig out{Vector(n), Matrix(n, n)};
    for (Index i = 0; i < n; ++i) {
        out.values(i) = solver.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

ThinSvd thin_svd(const Matrix& m, Index k) {
    const Index r = std::min(m.rows(), m.cols());
    if (k < 0 || k > r) throw InvalidInput("thin_svd: k out of range");
    if (!m.allFinite()) throw InvalidInput("thin_svd: non-finite entry");

    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return ThinSvd{svd.singularValues().head(k), svd.matrixU().leftCols(k),
                   svd.matrixV().leftCols(k)};
}

Matrix cholesky(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidInput("cholesky: matrix is not square");
    if (!m.allFinite()) throw InvalidInput("cholesky: non-finite entry");
    const Index n = m.rows();
    const double scale = n > 0 ? m.diagonal().cwiseAbs().maxCoeff() : 0.0;
    const double floor = 1e-12 * scale;

    Matrix l = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        const double d = m(j, j) - l.row(j).head(j).squaredNorm();
        if (!(d > floor)) {
            throw NotPositiveDefinite("cholesky: non-positive pivot " + std::to_string(d) +
                                          " at index " + std::to_string(j),
                                      static_cast<long>(j));
        }
        l(j, j) = std::sqrt(d);
        for (Index i = j + 1; i < n; ++i)
            l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
    return l;
}

Matrix random_orthogonal(Index n, std::uint64_t seed) {
    if (n < 1) throw InvalidInput("random_orthogonal: n must be >= 1");
    Rng rng(seed);
    Matrix g(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) g(i, j) = rng.normal();

    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < n; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

} // namespace tvnet
