#include "tvnet/supervised.hpp"

#include <cmath>

#include "fit_engine.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/linalg.hpp"
#include "tvnet/logistic.hpp"
#include "tvnet/moments.hpp"
#include "tvnet/parallel.hpp"

namespace tvnet {

void SupervisedConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("supervised: gamma must be in [0,1]");
    if (!(classifier_refit_tol > 0.0)) throw InvalidInput("supervised: refit tol must be > 0");
    if (!(nu >= 0.0)) throw InvalidInput("supervised: nu must be >= 0");
    base.validate();
}

namespace {

void check_label(int label) {
    if (label != 1 && label != -1) throw InvalidInput("supervised: label must be +1 or -1");
}

Matrix stack_codes(std::span<const Vector> codes) {
    if (codes.empty()) return Matrix();
    Matrix f(static_cast<Index>(codes.size()), codes.front().size());
    for (std::size_t i = 0; i < codes.size(); ++i) f.row(static_cast<Index>(i)) = codes[i];
    return f;
}

} // namespace

double logistic_loss(const LinearClassifier& classifier, const Vector& code, int label) {
    check_label(label);
    return logistic_deviance(label * classifier.decision(code));
}

Vector supervised_code_gradient(const LinearClassifier& classifier, const Vector& code,
                                int label) {
    check_label(label);
    const double margin = label * classifier.decision(code);
    return -label * sigmoid(-margin) * classifier.omega;
}

Vector active_set_direction(const Matrix& gram, const Vector& code, const Vector& code_gradient,
                            double l2_weight) {
    const Index k = code.size();
    if (gram.rows() != k || gram.cols() != k || code_gradient.size() != k)
        throw InvalidInput("active_set_direction: shape mismatch");
    std::vector<Index> active;
    for (Index j = 0; j < k; ++j)
        if (std::abs(code(j)) > 1e-12) active.push_back(j);

    Vector phi = Vector::Zero(k);
    if (active.empty()) return phi;
    Matrix sys = gram(active, active);
    sys.diagonal().array() += l2_weight;
    Matrix chol;
    try {
        chol = cholesky(0.5 * (sys + sys.transpose()));
    } catch (const NotPositiveDefinite& e) {
        throw SingularSystem(std::string("active set system is singular: ") + e.what());
    }
    const Vector rhs = code_gradient(active);
    const Vector y = chol.triangularView<Eigen::Lower>().solve(rhs);
    const Vector sol = chol.transpose().triangularView<Eigen::Upper>().solve(y);
    for (std::size_t a = 0; a < active.size(); ++a) phi(active[a]) = sol(static_cast<Index>(a));
    return phi;
}

Matrix supervised_dict_gradient(const Matrix& dictionary, const Vector& code, const Vector& x,
                                const Vector& code_gradient, double l2_weight) {
    if (dictionary.cols() != code.size() || dictionary.rows() != x.size())
        throw InvalidInput("supervised_dict_gradient: shape mismatch");
    const Vector phi =
        active_set_direction(dictionary.transpose() * dictionary, code, code_gradient, l2_weight);
    if (phi.isZero(0.0)) return Matrix::Zero(dictionary.rows(), dictionary.cols());
    return -(dictionary * phi) * code.transpose() + (x - dictionary * code) * phi.transpose();
}

std::vector<Matrix> combined_basis_gradient(std::span<const Matrix> unsup,
                                            std::span<const Matrix> sup, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw InvalidInput("combined_basis_gradient: gamma must be in [0,1]");
    if (unsup.size() != sup.size())
        throw InvalidInput("combined_basis_gradient: basis counts differ");
    std::vector<Matrix> out(unsup.size());
    for (std::size_t i = 0; i < unsup.size(); ++i) {
        if (unsup[i].rows() != sup[i].rows() || unsup[i].cols() != sup[i].cols())
            throw InvalidInput("combined_basis_gradient: shape mismatch");
        if (gamma == 1.0)
            out[i] = unsup[i];
        else if (gamma == 0.0)
            out[i] = sup[i];
        else
            out[i] = gamma * unsup[i] + (1.0 - gamma) * sup[i];
        project_symmetric_zero_diagonal(out[i]);
    }
    return out;
}

std::vector<Matrix> supervised_basis_gradient(const BasisSet& bases, std::span<const Vector> codes,
                                              std::span<const int> labels,
                                              std::span<const Vector> rows,
                                              std::span<const Matrix> moments,
                                              const LinearClassifier& classifier, GramMode mode,
                                              double l2_weight, Exec exec) {
    const std::size_t count = codes.size();
    if (labels.size() != count || rows.size() != count ||
        (mode == GramMode::kernel_weighted && moments.size() != count))
        throw InvalidInput("supervised_basis_gradient: inputs do not align");
    const Index n = bases.n;

    // For one time with second moment S (x x^T or the local moment):
    //   dA^i = phi_i (I - M) S - code_i (sum_j phi_j A^j) S.
    std::vector<Matrix> phi_part(count), code_part(count);
    std::vector<Vector> phis(count);
    parallel_for(exec, static_cast<Index>(count), [&](Index t) {
        const Vector g = supervised_code_gradient(classifier, codes[t], labels[t]);
        const Matrix s = mode == GramMode::single ? Matrix(rows[t] * rows[t].transpose())
                                                  : moments[t];
        const Matrix gram = coding_problem(bases, s).gram;
        phis[t] = active_set_direction(gram, codes[t], g, l2_weight);
        if (phis[t].isZero(0.0)) return;
        const Matrix r = Matrix::Identity(n, n) - bases.combine(codes[t]);
        phi_part[t].noalias() = r * s;
        code_part[t].noalias() = bases.combine(phis[t]) * s;
    });

    std::vector<Matrix> grad(static_cast<std::size_t>(bases.k), Matrix::Zero(n, n));
    for (std::size_t t = 0; t < count; ++t) {
        if (phi_part[t].size() == 0) continue;
        for (Index i = 0; i < bases.k; ++i) {
            if (phis[t](i) != 0.0) grad[i].noalias() += phis[t](i) * phi_part[t];
            if (codes[t](i) != 0.0) grad[i].noalias() -= codes[t](i) * code_part[t];
        }
    }
    for (Matrix& g : grad) project_symmetric_zero_diagonal(g);
    return grad;
}

LinearClassifier refit_classifier(std::span<const Vector> codes, std::span<const int> labels,
                                  double nu, double tol, const Vector* warm) {
    if (codes.empty()) throw InvalidInput("refit_classifier: no codes");
    const Matrix f = stack_codes(codes);
    const Vector penalty = Vector::Constant(f.cols(), nu);
    const LogisticFit fit = fit_logistic(f, labels, penalty, tol, warm);
    return LinearClassifier{fit.weights, nu};
}

double classifier_objective(const LinearClassifier& classifier, std::span<const Vector> codes,
                            std::span<const int> labels) {
    const Matrix f = stack_codes(codes);
    return logistic_objective(f, labels, Vector::Constant(f.cols(), classifier.nu),
                              classifier.omega);
}

Vector classifier_gradient(const LinearClassifier& classifier, std::span<const Vector> codes,
                           std::span<const int> labels) {
    const Matrix f = stack_codes(codes);
    return logistic_gradient(f, labels, Vector::Constant(f.cols(), classifier.nu),
                             classifier.omega);
}

SupervisedFitResult fit_supervised(const ObservationSequence& x, std::span<const int> labels,
                                   const SupervisedConfig& config, const BasisSet& init) {
    config.validate();
    if (static_cast<Index>(labels.size()) != x.length())
        throw InvalidInput("fit_supervised: need one label per time");
    for (int y : labels) check_label(y);
    init.validate();

    const FitConfig& base = config.base;
    const auto moments = local_second_moments(x.data, base.kernel, base.exec);
    const ElasticNetConfig coding = base.coding();
    const double l2 = config.active_set_ridge();

    LinearClassifier classifier{Vector::Zero(base.k), config.nu};

    detail::SupervisedHooks hooks;
    hooks.gamma = config.gamma;
    hooks.refit = [&](const BasisSet&, const std::vector<Vector>& codes) {
        classifier = refit_classifier(codes, labels, config.nu, config.classifier_refit_tol,
                                      &classifier.omega);
    };
    hooks.loss = [&](const BasisSet& b, std::span<const Index> batch,
                     const std::vector<Vector>& codes) {
        std::vector<Matrix> m;
        std::vector<Vector> warm;
        for (Index t : batch) {
            m.push_back(moments[t]);
            warm.push_back(codes[t]);
        }
        const auto solved = infer_codes_from_moments(b, m, coding, &warm, base.exec);
        double s = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i)
            s += logistic_loss(classifier, solved[i], labels[batch[i]]);
        return s;
    };
    hooks.gradient = [&](const BasisSet& b, std::span<const Index> batch,
                         const std::vector<Vector>& codes) {
        std::vector<Vector> c, r;
        std::vector<Matrix> m;
        std::vector<int> y;
        for (Index t : batch) {
            c.push_back(codes[t]);
            r.push_back(x.row(t));
            m.push_back(moments[t]);
            y.push_back(labels[t]);
        }
        return supervised_basis_gradient(b, c, y, r, m, classifier, config.gram_mode, l2,
                                         base.exec);
    };

    FitResult fit = detail::run_fit(x, moments, base, init, &hooks);
    SupervisedFitResult out;
    out.bases = std::move(fit.bases);
    out.classifier = classifier;
    out.codes = std::move(fit.codes);
    out.objective_trace = std::move(fit.objective_trace);
    out.converged = fit.converged;
    out.iterations = fit.iterations;
    out.rejected_steps = fit.rejected_steps;
    return out;
}

} // namespace tvnet
