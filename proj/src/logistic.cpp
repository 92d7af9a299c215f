#include "tvnet/logistic.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "tvnet/errors.hpp"

namespace tvnet {

double logistic_deviance(double margin) {
    return margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

void check(const Matrix& features, std::span<const int> labels, const Vector& penalty) {
    if (static_cast<Index>(labels.size()) != features.rows())
        throw InvalidInput("logistic: label count does not match rows");
    if (penalty.size() != features.cols())
        throw InvalidInput("logistic: penalty length does not match columns");
    for (int y : labels)
        if (y != 1 && y != -1) throw InvalidInput("logistic: labels must be +1 or -1");
    if (!features.allFinite()) throw InvalidInput("logistic: non-finite feature");
}

} // namespace

double logistic_objective(const Matrix& features, std::span<const int> labels,
                          const Vector& penalty, const Vector& weights) {
    const Vector z = features * weights;
    double s = 0.0;
    for (Index i = 0; i < z.size(); ++i) s += logistic_deviance(labels[i] * z(i));
    const double m = static_cast<double>(std::max<Index>(z.size(), 1));
    return s / m + 0.5 * penalty.dot(weights.cwiseAbs2());
}

Vector logistic_gradient(const Matrix& features, std::span<const int> labels,
                         const Vector& penalty, const Vector& weights) {
    const Vector z = features * weights;
    Vector r(z.size());
    for (Index i = 0; i < z.size(); ++i) r(i) = -labels[i] * sigmoid(-labels[i] * z(i));
    const double m = static_cast<double>(std::max<Index>(z.size(), 1));
    return features.transpose() * r / m + penalty.cwiseProduct(weights);
}

LogisticFit fit_logistic(const Matrix& features, std::span<const int> labels,
                         const Vector& penalty, double tol, const Vector* initial, int max_iters) {
    check(features, labels, penalty);
    const Index p = features.cols();
    const double m = static_cast<double>(std::max<Index>(features.rows(), 1));

    LogisticFit fit;
    fit.weights = initial ? *initial : Vector::Zero(p);
    if (fit.weights.size() != p) throw InvalidInput("logistic: initial point has wrong length");
    fit.objective = logistic_objective(features, labels, penalty, fit.weights);

    for (int it = 0; it < max_iters; ++it) {
        const Vector grad = logistic_gradient(features, labels, penalty, fit.weights);
        fit.gradient_norm = grad.norm();
        fit.iterations = it;
        if (fit.gradient_norm <= tol) {
            fit.converged = true;
            return fit;
        }
        const Vector z = features * fit.weights;
        Vector curv(z.size());
        for (Index i = 0; i < z.size(); ++i) {
            const double s = sigmoid(z(i));
            curv(i) = s * (1.0 - s);
        }
        Matrix h = features.transpose() * curv.asDiagonal() * features / m;
        h.diagonal() += penalty;
        // Tiny ridge keeps the Newton system solvable on separable,
        // unpenalized directions; the line search guards the step.
        h.diagonal().array() += 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
        Eigen::LDLT<Matrix> ldlt(h);
        Vector dir = -ldlt.solve(grad);
        if (!dir.allFinite() || dir.dot(grad) >= 0) dir = -grad;

        double step = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt, step *= 0.5) {
            const Vector cand = fit.weights + step * dir;
            const double f = logistic_objective(features, labels, penalty, cand);
            if (f <= fit.objective + 1e-4 * step * grad.dot(dir)) {
                fit.weights = cand;
                fit.objective = f;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    const Vector grad = logistic_gradient(features, labels, penalty, fit.weights);
    fit.gradient_norm = grad.norm();
    fit.converged = fit.gradient_norm <= tol;
    return fit;
}

} // namespace tvnet
