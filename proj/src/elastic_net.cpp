#include "tvnet/elastic_net.hpp"

#include <cmath>
#include <string>

#include "tvnet/errors.hpp"
#include "tvnet/linalg.hpp"

namespace tvnet {

double QuadraticProblem::fit(const Vector& beta) const {
    return beta.dot(gram * beta) - 2.0 * linear.dot(beta) + offset;
}

void validate_problem(const QuadraticProblem& problem, bool check_psd) {
    const Index k = problem.linear.size();
    if (problem.gram.rows() != k || problem.gram.cols() != k)
        throw InvalidInput("elastic net: gram is not " + std::to_string(k) + "x" +
                           std::to_string(k));
    if (!problem.gram.allFinite() || !problem.linear.allFinite() ||
        !std::isfinite(problem.offset))
        throw InvalidInput("elastic net: non-finite problem data");
    if (k == 0) return;
    const double scale = problem.gram.cwiseAbs().maxCoeff();
    if (max_asymmetry(problem.gram) > 1e-12 * std::max(scale, 1e-300))
        throw InvalidInput("elastic net: gram is not symmetric");
    if (check_psd && scale > 0) {
        const Matrix sym = 0.5 * (problem.gram + problem.gram.transpose());
        const SymEig eig = sym_eig(sym);
        const double top = eig.values(0);
        const double bottom = eig.values(k - 1);
        if (bottom < -1e-10 * std::max(top, 0.0))
            throw InvalidInput("elastic net: gram has negative eigenvalue " +
                               std::to_string(bottom));
    }
}

void ElasticNetConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw InvalidInput("elastic net: lambda must be finite and >= 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("elastic net: alpha must be in [0,1]");
    if (!(tol > 0.0)) throw InvalidInput("elastic net: tol must be > 0");
    if (max_sweeps < 1) throw InvalidInput("elastic net: max_sweeps must be >= 1");
}

double elastic_net_objective(const QuadraticProblem& problem, const ElasticNetConfig& config,
                             const Vector& beta) {
    return problem.fit(beta) + 0.5 * config.alpha * config.lambda * beta.squaredNorm() +
           (1.0 - config.alpha) * config.lambda * beta.lpNorm<1>();
}

Vector kkt_residual(const QuadraticProblem& problem, const ElasticNetConfig& config,
                    const Vector& beta) {
    const double l1 = (1.0 - config.alpha) * config.lambda;
    const double l2 = config.alpha * config.lambda;
    const Vector smooth = 2.0 * (problem.gram * beta) - 2.0 * problem.linear + l2 * beta;
    Vector r(beta.size());
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta(j) > 0)
            r(j) = std::abs(smooth(j) + l1);
        else if (beta(j) < 0)
            r(j) = std::abs(smooth(j) - l1);
        else
            r(j) = std::max(0.0, std::abs(smooth(j)) - l1);
    }
    return r;
}

ElasticNetResult solve_elastic_net(const QuadraticProblem& problem,
                                   const ElasticNetConfig& config,
                                   const std::optional<Vector>& warm_start) {
    config.validate();
    validate_problem(problem, config.check_psd);
    const Index k = problem.size();

    ElasticNetResult result;
    if (warm_start) {
        if (warm_start->size() != k) throw InvalidInput("elastic net: warm start has wrong length");
        if (!warm_start->allFinite()) throw InvalidInput("elastic net: non-finite warm start");
        result.beta = *warm_start;
    } else {
        result.beta = Vector::Zero(k);
    }
    Vector& beta = result.beta;
    if (k == 0) {
        result.converged = true;
        return result;
    }

    const double l1 = (1.0 - config.alpha) * config.lambda;
    const double l2 = config.alpha * config.lambda;
    const Matrix& g = problem.gram;

    // gb caches G beta so each coordinate update is O(k).
    Vector gb = g * beta;
    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < k; ++j) {
            const double old = beta(j);
            const double partial = problem.linear(j) - (gb(j) - g(j, j) * old);
            const double denom = 2.0 * g(j, j) + l2;
            const double numer = soft_threshold(2.0 * partial, l1);
            double next;
            if (denom > 0.0) {
                next = numer / denom;
            } else if (numer == 0.0) {
                next = 0.0;
            } else {
                throw DegenerateProblem("elastic net: coordinate " + std::to_string(j) +
                                        " has zero curvature and is unbounded");
            }
            const double delta = next - old;
            if (delta != 0.0) {
                beta(j) = next;
                gb.noalias() += delta * g.col(j);
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        result.sweeps = sweep + 1;
        if (config.record_objective)
            result.objective_trace.push_back(elastic_net_objective(problem, config, beta));
        if (max_change < config.tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

QuadraticProblem build_weighted_problem(std::span<const Matrix> dictionaries,
                                        std::span<const Vector> targets,
                                        std::span<const double> weights) {
    if (dictionaries.size() != targets.size() || dictionaries.size() != weights.size())
        throw InvalidInput("build_weighted_problem: sequence lengths differ");
    if (dictionaries.empty()) throw InvalidInput("build_weighted_problem: no terms");
    const Index n = dictionaries.front().rows();
    const Index k = dictionaries.front().cols();

    QuadraticProblem p{Matrix::Zero(k, k), Vector::Zero(k), 0.0};
    for (std::size_t s = 0; s < dictionaries.size(); ++s) {
        const Matrix& d = dictionaries[s];
        const Vector& x = targets[s];
        const double w = weights[s];
        if (d.rows() != n || d.cols() != k || x.size() != n)
            throw InvalidInput("build_weighted_problem: shape mismatch at term " +
                               std::to_string(s));
        if (!(w >= 0.0)) throw InvalidInput("build_weighted_problem: negative weight");
        if (w == 0.0) continue;
        p.gram.noalias() += w * (d.transpose() * d);
        p.linear.noalias() += w * (d.transpose() * x);
        p.offset += w * x.squaredNorm();
    }
    // Exact symmetry, independent of accumulation order inside the product.
    p.gram = 0.5 * (p.gram + p.gram.transpose()).eval();
    return p;
}

ElasticNetResult solve_weighted_lasso(const Matrix& covariates, const Vector& response,
                                      const Vector& weights, double lambda, double tol,
                                      int max_sweeps) {
    const Index m = covariates.rows();
    if (m < 1) throw InvalidInput("solve_weighted_lasso: need at least one observation");
    if (response.size() != m || weights.size() != m)
        throw InvalidInput("solve_weighted_lasso: shape mismatch");
    if ((weights.array() < 0.0).any())
        throw InvalidInput("solve_weighted_lasso: negative weight");
    if (!covariates.allFinite() || !response.allFinite() || !weights.allFinite())
        throw InvalidInput("solve_weighted_lasso: non-finite input");

    const Matrix wx = weights.asDiagonal() * covariates;
    QuadraticProblem p;
    p.gram = covariates.transpose() * wx;
    p.gram = 0.5 * (p.gram + p.gram.transpose()).eval();
    p.linear = wx.transpose() * response;
    p.offset = weights.dot(response.cwiseProduct(response));

    ElasticNetConfig config;
    config.lambda = lambda;
    config.alpha = 0.0;
    config.tol = tol;
    config.max_sweeps = max_sweeps;
    return solve_elastic_net(p, config);
}

} // namespace tvnet
