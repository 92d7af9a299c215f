#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tvnet/elastic_net.hpp"
#include "tvnet/keller.hpp"
#include "tvnet/temporal_kernel.hpp"
#include "tvnet/types.hpp"

namespace tvnet {

/// k symmetric n x n basis structures with exactly zero diagonals.
struct BasisSet {
    Index n = 0;
    Index k = 0;
    std::vector<Matrix> bases;

    static BasisSet zeros(Index n, Index k);
    // Throws InvalidInput on shape errors, nonzero diagonals or asymmetry > 1e-10.
    void validate() const;
    // M = sum_i code_i A^i
    Matrix combine(const Vector& code) const;
};

struct StructureCode {
    Vector code;
    Index time = 0;
};

/// Strict upper triangle in row-major order, n(n-1)/2 entries.
Vector vec_upper(const Matrix& m);
/// Inverse of vec_upper onto symmetric zero-diagonal matrices.
Matrix unvec_upper(const Vector& v, Index n);

struct LineSearchConfig {
    double shrink = 0.5;
    double sufficient_decrease = 1e-4;
    int max_backtracks = 30;
    // Trial step s0. Inside fit() this is overwritten each iteration with
    // twice the last accepted step (1 / |gradient|_F on the first iteration).
    double initial_step = 1.0;
};

enum class InitMode { pca, random };

struct FitConfig {
    Index k = 6;
    double lambda_beta = 0.0;
    double alpha = 0.5;
    double lambda_A = 0.0;
    KernelSpec kernel;
    // 0 or >= T selects full-batch descent.
    Index batch_size = 0;
    int max_outer_iters = 200;
    double rel_tol = 1e-6;
    LineSearchConfig line_search;
    std::uint64_t seed = 0;

    InitMode init = InitMode::pca;
    // Self-regression penalty for the PCA initialization pass.
    double keller_lambda = 0.0;

    double code_tol = 1e-8;
    int code_max_sweeps = 10000;
    Exec exec = Exec::parallel;

    void validate() const;
    ElasticNetConfig coding() const;
};

struct FitResult {
    BasisSet bases;
    std::vector<StructureCode> codes; // one per training time, re-solved at the final bases
    // Objective after each accepted basis update (batch-scaled in stochastic
    // mode), followed by the full objective after the final code refresh.
    std::vector<double> objective_trace;
    bool converged = false;
    int iterations = 0;
    int rejected_steps = 0;
    std::vector<std::string> warnings;
};

/// n x k matrix whose column i is A^i x.
Matrix pseudo_dictionary(const BasisSet& bases, const Vector& x);

/// Coding problem sum_t' k(t,t') |x_t' - D_t' beta|^2 expressed through the
/// local second moment S_t: G_ij = tr(A^i^T A^j S), b_i = tr(A^i^T S), c = tr S.
QuadraticProblem coding_problem(const BasisSet& bases, const Matrix& moment);

/// Residual sum tr((I - M) S (I - M)^T) for structure M.
double local_fit(const Matrix& structure, const Matrix& moment);

std::vector<StructureCode> infer_codes(const BasisSet& bases, const ObservationSequence& x,
                                       const KernelSpec& kernel, double lambda_beta,
                                       double alpha, std::span<const Index> times,
                                       Exec exec = Exec::parallel, double tol = 1e-8);

/// Codes from precomputed moments (moments[i] belongs to times[i]); warm
/// starts, when given, must align with times.
std::vector<Vector> infer_codes_from_moments(const BasisSet& bases,
                                             std::span<const Matrix> moments,
                                             const ElasticNetConfig& config,
                                             const std::vector<Vector>* warm = nullptr,
                                             Exec exec = Exec::parallel);

struct ObjectiveTerms {
    double data_fit = 0.0;
    double code_penalty = 0.0;
    double basis_penalty = 0.0;

    double total() const { return data_fit + code_penalty + basis_penalty; }
};

/// Joint objective: kernel-weighted reconstruction error summed over the
/// coded times, elastic-net code penalty, and lambda_A times the entrywise
/// l1 norm of every basis.
ObjectiveTerms objective(const BasisSet& bases, std::span<const StructureCode> codes,
                         const ObservationSequence& x, const FitConfig& config);

double code_penalty(const Vector& code, double lambda_beta, double alpha);
double basis_l1(const BasisSet& bases);

/// Gradient of the data-fit term with respect to each basis for fixed codes,
/// projected onto symmetric zero-diagonal matrices.
std::vector<Matrix> unsupervised_basis_gradient(const BasisSet& bases,
                                                std::span<const StructureCode> codes,
                                                const ObservationSequence& x,
                                                const KernelSpec& kernel,
                                                Exec exec = Exec::parallel);

/// Same gradient from moments aligned with codes. Per-time terms are formed
/// concurrently and summed in index order.
std::vector<Matrix> unsupervised_gradient_from_moments(const BasisSet& bases,
                                                       std::span<const Vector> codes,
                                                       std::span<const Matrix> moments,
                                                       Exec exec = Exec::parallel);

/// g_uv <- (g_uv + g_vu) / 2, g_uu <- 0.
void project_symmetric_zero_diagonal(Matrix& g);

/// soft_threshold(A - step * gradient, step * lambda_A) on off-diagonal entries.
Matrix proximal_l1_step(const Matrix& basis, const Matrix& gradient, double step,
                        double lambda_A);

/// Squared norm of the minimum-norm subgradient of (smooth + lambda_A |A|_1):
/// the stationarity measure handed to the line search.
double stationarity_norm_sq(const BasisSet& bases, std::span<const Matrix> gradient,
                            double lambda_A);

struct LineSearchResult {
    double step = 0.0;
    bool accepted = false;
    double objective = 0.0;
    int trials = 0;
};

/// Backtracking over s0, s0 * shrink, ... (max_backtracks trials); accepts the
/// first step with f(step) <= f0 - c1 * step * gradient_norm_sq.
LineSearchResult line_search(double current_objective,
                             const std::function<double(double)>& candidate_objective,
                             double gradient_norm_sq, const LineSearchConfig& config);

/// Principal structures of a set of self-regression estimates: symmetrize,
/// vectorize upper triangles, take the top-k right singular vectors of the
/// uncentered stack. Each basis has unit vec_upper norm and its
/// largest-magnitude entry positive. Missing rank is filled with seeded
/// random bases and reported through `warnings`.
BasisSet init_bases_pca(std::span<const NetworkEstimate> estimates, Index k,
                        std::uint64_t seed = 0, std::vector<std::string>* warnings = nullptr);

/// Seeded random symmetric zero-diagonal bases with unit vec_upper norm.
BasisSet random_bases(Index n, Index k, std::uint64_t seed);

/// Initial bases chosen by config.init.
BasisSet initial_bases(const ObservationSequence& x, const FitConfig& config,
                       std::vector<std::string>* warnings = nullptr);

/// Block coordinate descent on the joint objective: re-solve codes for the
/// batch, then one proximal gradient step on every basis with a backtracking
/// line search. Without `init`, bases come from initial_bases().
FitResult fit(const ObservationSequence& x, const FitConfig& config,
              const std::optional<BasisSet>& init = std::nullopt);

namespace reference {

/// Builds every pseudo-dictionary in each kernel window explicitly.
std::vector<StructureCode> infer_codes(const BasisSet& bases, const ObservationSequence& x,
                                       const KernelSpec& kernel, double lambda_beta,
                                       double alpha, std::span<const Index> times,
                                       double tol = 1e-8);

/// dL/dD_s = sum_t k(t,s) (-2)(x_s - D_s b_t) b_t^T, pushed back through
/// D_s = [A^1 x_s ... A^k x_s], then projected.
std::vector<Matrix> unsupervised_basis_gradient(const BasisSet& bases,
                                                std::span<const StructureCode> codes,
                                                const ObservationSequence& x,
                                                const KernelSpec& kernel);

} // namespace reference

} // namespace tvnet
