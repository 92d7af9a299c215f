#pragma once
#include <span>

#include "tvnet/types.hpp"

namespace tvnet {

struct LogisticFit {
    Vector weights;
    double objective = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// log(1 + exp(-margin)) without overflow.
double logistic_deviance(double margin);
/// 1 / (1 + exp(-z)).
double sigmoid(double z);

/// Damped Newton on
///   (1/m) sum_i log(1 + exp(-y_i w^T f_i)) + 1/2 sum_j penalty_j w_j^2,
/// stopping once the gradient norm is <= tol.
LogisticFit fit_logistic(const Matrix& features, std::span<const int> labels,
                         const Vector& penalty, double tol, const Vector* initial = nullptr,
                         int max_iters = 200);

double logistic_objective(const Matrix& features, std::span<const int> labels,
                          const Vector& penalty, const Vector& weights);
Vector logistic_gradient(const Matrix& features, std::span<const int> labels,
                         const Vector& penalty, const Vector& weights);

} // namespace tvnet
