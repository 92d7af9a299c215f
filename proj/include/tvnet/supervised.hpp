#pragma once
#include <span>
#include <vector>

#include "tvnet/basis.hpp"
#include "tvnet/types.hpp"

namespace tvnet {

/// Linear classifier on structure codes, trained with ridge weight nu.
struct LinearClassifier {
    Vector omega;
    double nu = 0.0;

    double decision(const Vector& code) const { return omega.dot(code); }
};

/// Which Gram matrix the active-set system uses. `single` takes the
/// pseudo-dictionary of the coded time alone; `kernel_weighted` takes the
/// kernel-weighted Gram the code was actually solved with.
enum class GramMode { single, kernel_weighted };

struct SupervisedConfig {
    double gamma = 1.0;
    FitConfig base;
    double classifier_refit_tol = 1e-8;
    double nu = 1e-3;
    GramMode gram_mode = GramMode::single;

    void validate() const;
    // Ridge weight of the active-set system. Codes minimise
    // |x - D b|^2 + (alpha lambda / 2)|b|^2 + ..., whose active-set
    // derivative involves D^T D + (alpha lambda / 2) I.
    double active_set_ridge() const { return 0.5 * base.alpha * base.lambda_beta; }
};

/// log(1 + exp(-y omega^T code)), label in {-1, +1}.
double logistic_loss(const LinearClassifier& classifier, const Vector& code, int label);

/// -y sigma(-y omega^T code) omega.
Vector supervised_code_gradient(const LinearClassifier& classifier, const Vector& code, int label);

/// phi with phi_L = (G_LL + l2 I)^{-1} g_L on the active set L = {|code_j| > 1e-12}
/// and zero elsewhere. Throws SingularSystem when the system is singular.
Vector active_set_direction(const Matrix& gram, const Vector& code, const Vector& code_gradient,
                            double l2_weight);

/// -D phi code^T + (x - D code) phi^T, with phi from active_set_direction(D^T D, ...).
Matrix supervised_dict_gradient(const Matrix& dictionary, const Vector& code, const Vector& x,
                                const Vector& code_gradient, double l2_weight);

/// gamma * unsup + (1 - gamma) * sup, projected to symmetric zero-diagonal.
/// gamma == 1 and gamma == 0 return the projected pure gradients exactly.
std::vector<Matrix> combined_basis_gradient(std::span<const Matrix> unsup,
                                            std::span<const Matrix> sup, double gamma);

/// Supervised basis gradient summed over times: the dictionary gradient of
/// each time pushed through D = [A^1 x ... A^k x]. `moments[i]` is the local
/// second moment of codes[i] (used by kernel_weighted mode); `rows[i]` its
/// observation.
std::vector<Matrix> supervised_basis_gradient(const BasisSet& bases, std::span<const Vector> codes,
                                              std::span<const int> labels,
                                              std::span<const Vector> rows,
                                              std::span<const Matrix> moments,
                                              const LinearClassifier& classifier, GramMode mode,
                                              double l2_weight, Exec exec = Exec::parallel);

/// Ridge logistic regression (no intercept) minimising
/// mean deviance + nu/2 |omega|^2 to gradient norm <= tol.
LinearClassifier refit_classifier(std::span<const Vector> codes, std::span<const int> labels,
                                  double nu, double tol, const Vector* warm = nullptr);

double classifier_objective(const LinearClassifier& classifier, std::span<const Vector> codes,
                            std::span<const int> labels);
Vector classifier_gradient(const LinearClassifier& classifier, std::span<const Vector> codes,
                           std::span<const int> labels);

struct SupervisedFitResult {
    BasisSet bases;
    LinearClassifier classifier;
    std::vector<StructureCode> codes;
    std::vector<double> objective_trace;
    bool converged = false;
    int iterations = 0;
    int rejected_steps = 0;
};

/// Task-driven basis learning: each iteration re-solves codes, refits omega,
/// mixes unsupervised and supervised basis gradients with weight gamma and
/// takes a line-searched proximal step on the gamma-mixed objective.
SupervisedFitResult fit_supervised(const ObservationSequence& x, std::span<const int> labels,
                                   const SupervisedConfig& config, const BasisSet& init);

} // namespace tvnet
