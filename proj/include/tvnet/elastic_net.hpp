#pragma once
#include <optional>
#include <span>
#include <vector>

#include "tvnet/types.hpp"

namespace tvnet {

/// Quadratic sufficient statistics of a least-squares data term:
///   fit(beta) = beta^T gram beta - 2 linear^T beta + offset.
struct QuadraticProblem {
    Matrix gram;
    Vector linear;
    double offset = 0.0;

    Index size() const { return linear.size(); }
    double fit(const Vector& beta) const;
};

/// Checks shape, finiteness, symmetry (1e-12 relative) and, when requested,
/// that no eigenvalue lies below -1e-10 times the largest one.
void validate_problem(const QuadraticProblem& problem, bool check_psd = true);

/// Elastic-net settings. NOTE the penalty convention: alpha weights the
/// squared l2 term and (1 - alpha) the l1 term,
///   J(beta) = fit(beta) + (alpha lambda / 2) |beta|_2^2 + (1 - alpha) lambda |beta|_1,
/// which is the reverse of glmnet's alpha.
struct ElasticNetConfig {
    double lambda = 0.0;
    double alpha = 0.0;
    double tol = 1e-8;
    int max_sweeps = 10000;
    bool check_psd = true;
    bool record_objective = false;

    void validate() const;
};

struct ElasticNetResult {
    Vector beta;
    bool converged = false;
    int sweeps = 0;
    // J after each sweep, filled only when record_objective is set.
    std::vector<double> objective_trace;
};

/// Cyclic coordinate descent in index order 0..k-1. Converged once the
/// largest absolute coordinate change in a sweep drops below tol; running out
/// of sweeps returns the current iterate with converged = false.
ElasticNetResult solve_elastic_net(const QuadraticProblem& problem,
                                   const ElasticNetConfig& config,
                                   const std::optional<Vector>& warm_start = std::nullopt);

double elastic_net_objective(const QuadraticProblem& problem, const ElasticNetConfig& config,
                             const Vector& beta);

/// Per-coordinate distance of zero from the subdifferential of J at beta.
Vector kkt_residual(const QuadraticProblem& problem, const ElasticNetConfig& config,
                    const Vector& beta);

/// G = sum w D^T D, b = sum w D^T x, c = sum w |x|^2.
QuadraticProblem build_weighted_problem(std::span<const Matrix> dictionaries,
                                        std::span<const Vector> targets,
                                        std::span<const double> weights);

/// Weighted lasso: minimises sum_i w_i (y_i - x_i^T beta)^2 + lambda |beta|_1.
ElasticNetResult solve_weighted_lasso(const Matrix& covariates, const Vector& response,
                                      const Vector& weights, double lambda, double tol = 1e-8,
                                      int max_sweeps = 10000);

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

} // namespace tvnet
