#include "tvnet/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fit_engine.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/linalg.hpp"
#include "tvnet/moments.hpp"
#include "tvnet/parallel.hpp"
#include "tvnet/rng.hpp"
#include "tvnet/supervised.hpp"

namespace tvnet {

// ---------------------------------------------------------------- BasisSet

BasisSet BasisSet::zeros(Index n, Index k) {
    BasisSet b;
    b.n = n;
    b.k = k;
    b.bases.assign(static_cast<std::size_t>(k), Matrix::Zero(n, n));
    return b;
}

void BasisSet::validate() const {
    if (n < 1 || k < 1) throw InvalidInput("basis set: n and k must be >= 1");
    if (static_cast<Index>(bases.size()) != k)
        throw InvalidInput("basis set: expected " + std::to_string(k) + " bases");
    for (std::size_t i = 0; i < bases.size(); ++i) {
        const Matrix& a = bases[i];
        if (a.rows() != n || a.cols() != n)
            throw InvalidInput("basis set: basis " + std::to_string(i) + " has wrong shape");
        if (!a.allFinite()) throw InvalidInput("basis set: non-finite entry");
        if ((a.diagonal().array() != 0.0).any())
            throw InvalidInput("basis set: basis " + std::to_string(i) + " has nonzero diagonal");
        if (max_asymmetry(a) > 1e-10)
            throw InvalidInput("basis set: basis " + std::to_string(i) + " is not symmetric");
    }
}

Matrix BasisSet::combine(const Vector& code) const {
    Matrix m = Matrix::Zero(n, n);
    for (Index i = 0; i < k; ++i)
        if (code(i) != 0.0) m.noalias() += code(i) * bases[i];
    return m;
}

Vector vec_upper(const Matrix& m) {
    const Index n = m.rows();
    Vector v(n * (n - 1) / 2);
    Index p = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) v(p++) = m(i, j);
    return v;
}

Matrix unvec_upper(const Vector& v, Index n) {
    if (v.size() != n * (n - 1) / 2) throw InvalidInput("unvec_upper: length mismatch");
    Matrix m = Matrix::Zero(n, n);
    Index p = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            m(i, j) = v(p);
            m(j, i) = v(p);
            ++p;
        }
    return m;
}

// ------------------------------------------------------------- FitConfig

void FitConfig::validate() const {
    if (k < 1) throw InvalidInput("fit: k must be >= 1");
    if (!(lambda_beta >= 0.0)) throw InvalidInput("fit: lambda_beta must be >= 0");
    if (!(lambda_A >= 0.0)) throw InvalidInput("fit: lambda_A must be >= 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("fit: alpha must be in [0,1]");
    if (batch_size < 0) throw InvalidInput("fit: batch_size must be >= 0");
    if (max_outer_iters < 1) throw InvalidInput("fit: max_outer_iters must be >= 1");
    if (!(rel_tol >= 0.0)) throw InvalidInput("fit: rel_tol must be >= 0");
    if (!(line_search.shrink > 0.0 && line_search.shrink < 1.0))
        throw InvalidInput("fit: line search shrink must be in (0,1)");
    if (!(line_search.sufficient_decrease > 0.0 && line_search.sufficient_decrease < 1.0))
        throw InvalidInput("fit: sufficient decrease constant must be in (0,1)");
    if (line_search.max_backtracks < 1) throw InvalidInput("fit: max_backtracks must be >= 1");
    if (!(keller_lambda >= 0.0)) throw InvalidInput("fit: keller_lambda must be >= 0");
    kernel.validate();
}

ElasticNetConfig FitConfig::coding() const {
    ElasticNetConfig c;
    c.lambda = lambda_beta;
    c.alpha = alpha;
    c.tol = code_tol;
    c.max_sweeps = code_max_sweeps;
    c.check_psd = false; // Gram of pseudo-dictionaries is PSD by construction
    return c;
}

// ------------------------------------------------------------ coding

Matrix pseudo_dictionary(const BasisSet& bases, const Vector& x) {
    if (x.size() != bases.n) throw InvalidInput("pseudo_dictionary: vector length mismatch");
    if (static_cast<Index>(bases.bases.size()) != bases.k)
        throw InvalidInput("pseudo_dictionary: basis count mismatch");
    Matrix d(bases.n, bases.k);
    for (Index i = 0; i < bases.k; ++i) {
        if (bases.bases[i].rows() != bases.n || bases.bases[i].cols() != bases.n)
            throw InvalidInput("pseudo_dictionary: basis shape mismatch");
        d.col(i).noalias() = bases.bases[i] * x;
    }
    return d;
}

QuadraticProblem coding_problem(const BasisSet& bases, const Matrix& moment) {
    const Index k = bases.k;
    std::vector<Matrix> as(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j) as[j].noalias() = bases.bases[j] * moment;

    QuadraticProblem p{Matrix(k, k), Vector(k), moment.trace()};
    for (Index i = 0; i < k; ++i) {
        p.linear(i) = bases.bases[i].cwiseProduct(moment).sum();
        for (Index j = i; j < k; ++j) {
            const double g = bases.bases[i].cwiseProduct(as[j]).sum();
            p.gram(i, j) = g;
            p.gram(j, i) = g;
        }
    }
    return p;
}

double local_fit(const Matrix& structure, const Matrix& moment) {
    const Matrix r = Matrix::Identity(structure.rows(), structure.cols()) - structure;
    return (r * moment).cwiseProduct(r).sum();
}

std::vector<Vector> infer_codes_from_moments(const BasisSet& bases,
                                             std::span<const Matrix> moments,
                                             const ElasticNetConfig& config,
                                             const std::vector<Vector>* warm, Exec exec) {
    if (warm && warm->size() != moments.size())
        throw InvalidInput("infer_codes: warm starts do not align with targets");
    std::vector<Vector> out(moments.size());
    parallel_for(exec, static_cast<Index>(moments.size()), [&](Index i) {
        const QuadraticProblem p = coding_problem(bases, moments[i]);
        std::optional<Vector> start;
        if (warm) start = (*warm)[i];
        out[i] = solve_elastic_net(p, config, start).beta;
    });
    return out;
}

namespace {

void check_times(std::span<const Index> times, Index length) {
    for (Index t : times)
        if (t < 0 || t >= length) throw InvalidInput("time index out of range");
}

ElasticNetConfig coding_config(double lambda_beta, double alpha, double tol) {
    ElasticNetConfig c;
    c.lambda = lambda_beta;
    c.alpha = alpha;
    c.tol = tol;
    c.check_psd = false;
    return c;
}

} // namespace

std::vector<StructureCode> infer_codes(const BasisSet& bases, const ObservationSequence& x,
                                       const KernelSpec& kernel, double lambda_beta,
                                       double alpha, std::span<const Index> times, Exec exec,
                                       double tol) {
    bases.validate();
    if (x.dim() != bases.n) throw InvalidInput("infer_codes: dimension mismatch");
    check_times(times, x.length());
    const ElasticNetConfig config = coding_config(lambda_beta, alpha, tol);
    config.validate();

    const auto moments = local_second_moments(x.data, times, kernel, exec);
    const auto betas = infer_codes_from_moments(bases, moments, config, nullptr, exec);
    std::vector<StructureCode> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = {betas[i], times[i]};
    return out;
}

// ------------------------------------------------------------ objective

double code_penalty(const Vector& code, double lambda_beta, double alpha) {
    return 0.5 * alpha * lambda_beta * code.squaredNorm() +
           (1.0 - alpha) * lambda_beta * code.lpNorm<1>();
}

double basis_l1(const BasisSet& bases) {
    double s = 0.0;
    for (const Matrix& a : bases.bases) s += a.cwiseAbs().sum();
    return s;
}

ObjectiveTerms objective(const BasisSet& bases, std::span<const StructureCode> codes,
                         const ObservationSequence& x, const FitConfig& config) {
    if (x.dim() != bases.n) throw InvalidInput("objective: dimension mismatch");
    std::vector<Index> times;
    times.reserve(codes.size());
    for (const auto& c : codes) {
        if (c.code.size() != bases.k) throw InvalidInput("objective: code length mismatch");
        times.push_back(c.time);
    }
    check_times(times, x.length());
    const auto moments = local_second_moments(x.data, times, config.kernel, config.exec);

    std::vector<double> fits(codes.size());
    parallel_for(config.exec, static_cast<Index>(codes.size()), [&](Index i) {
        fits[i] = local_fit(bases.combine(codes[i].code), moments[i]);
    });

    ObjectiveTerms terms;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        terms.data_fit += fits[i];
        terms.code_penalty += code_penalty(codes[i].code, config.lambda_beta, config.alpha);
    }
    terms.basis_penalty = config.lambda_A * basis_l1(bases);
    return terms;
}

// ------------------------------------------------------------ gradients

void project_symmetric_zero_diagonal(Matrix& g) {
    const Index n = g.rows();
    for (Index u = 0; u < n; ++u) {
        g(u, u) = 0.0;
        for (Index v = u + 1; v < n; ++v) {
            const double s = 0.5 * (g(u, v) + g(v, u));
            g(u, v) = s;
            g(v, u) = s;
        }
    }
}

std::vector<Matrix> unsupervised_gradient_from_moments(const BasisSet& bases,
                                                       std::span<const Vector> codes,
                                                       std::span<const Matrix> moments,
                                                       Exec exec) {
    if (codes.size() != moments.size())
        throw InvalidInput("basis gradient: codes and moments do not align");
    const Index n = bases.n;
    const Index count = static_cast<Index>(codes.size());

    // d fit_t / dM_t = -2 (I - M_t) S_t; basis i picks up code_t(i) times that.
    std::vector<Matrix> per_time(codes.size());
    parallel_for(exec, count, [&](Index t) {
        if (codes[t].isZero(0.0)) return;
        const Matrix r = Matrix::Identity(n, n) - bases.combine(codes[t]);
        per_time[t].noalias() = -2.0 * (r * moments[t]);
    });

    std::vector<Matrix> grad(static_cast<std::size_t>(bases.k), Matrix::Zero(n, n));
    for (Index t = 0; t < count; ++t) {
        if (per_time[t].size() == 0) continue;
        for (Index i = 0; i < bases.k; ++i)
            if (codes[t](i) != 0.0) grad[i].noalias() += codes[t](i) * per_time[t];
    }
    for (Matrix& g : grad) project_symmetric_zero_diagonal(g);
    return grad;
}

std::vector<Matrix> unsupervised_basis_gradient(const BasisSet& bases,
                                                std::span<const StructureCode> codes,
                                                const ObservationSequence& x,
                                                const KernelSpec& kernel, Exec exec) {
    if (x.dim() != bases.n) throw InvalidInput("basis gradient: dimension mismatch");
    std::vector<Index> times;
    std::vector<Vector> betas;
    for (const auto& c : codes) {
        if (c.code.size() != bases.k) throw InvalidInput("basis gradient: code length mismatch");
        times.push_back(c.time);
        betas.push_back(c.code);
    }
    check_times(times, x.length());
    const auto moments = local_second_moments(x.data, times, kernel, exec);
    return unsupervised_gradient_from_moments(bases, betas, moments, exec);
}

Matrix proximal_l1_step(const Matrix& basis, const Matrix& gradient, double step,
                        double lambda_A) {
    if (!(step > 0.0)) throw InvalidInput("proximal_l1_step: step must be > 0");
    if (!(lambda_A >= 0.0)) throw InvalidInput("proximal_l1_step: lambda_A must be >= 0");
    if (basis.rows() != gradient.rows() || basis.cols() != gradient.cols())
        throw InvalidInput("proximal_l1_step: shape mismatch");
    const double thr = step * lambda_A;
    Matrix out(basis.rows(), basis.cols());
    for (Index j = 0; j < basis.cols(); ++j)
        for (Index i = 0; i < basis.rows(); ++i)
            out(i, j) = i == j ? 0.0 : soft_threshold(basis(i, j) - step * gradient(i, j), thr);
    return out;
}

double stationarity_norm_sq(const BasisSet& bases, std::span<const Matrix> gradient,
                            double lambda_A) {
    double s = 0.0;
    for (Index i = 0; i < bases.k; ++i) {
        const Matrix& a = bases.bases[i];
        const Matrix& g = gradient[i];
        for (Index c = 0; c < a.cols(); ++c)
            for (Index r = 0; r < a.rows(); ++r) {
                if (r == c) continue;
                double v;
                if (a(r, c) > 0)
                    v = g(r, c) + lambda_A;
                else if (a(r, c) < 0)
                    v = g(r, c) - lambda_A;
                else
                    v = soft_threshold(g(r, c), lambda_A);
                s += v * v;
            }
    }
    return s;
}

LineSearchResult line_search(double current_objective,
                             const std::function<double(double)>& candidate_objective,
                             double gradient_norm_sq, const LineSearchConfig& config) {
    LineSearchResult res;
    res.objective = current_objective;
    if (!(config.initial_step > 0.0)) throw InvalidInput("line_search: initial step must be > 0");
    if (gradient_norm_sq == 0.0) {
        res.step = config.initial_step;
        res.accepted = true;
        return res;
    }
    double step = config.initial_step;
    for (int trial = 0; trial < config.max_backtracks; ++trial, step *= config.shrink) {
        res.trials = trial + 1;
        const double f = candidate_objective(step);
        if (std::isfinite(f) &&
            f <= current_objective - config.sufficient_decrease * step * gradient_norm_sq) {
            res.step = step;
            res.accepted = true;
            res.objective = f;
            return res;
        }
    }
    res.step = 0.0;
    return res;
}

// ------------------------------------------------------- initialization

namespace {

void fix_sign(Vector& v) {
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
}

Matrix random_unit_basis(Index n, Rng& rng) {
    Vector v(n * (n - 1) / 2);
    for (Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
    v /= v.norm();
    fix_sign(v);
    return unvec_upper(v, n);
}

} // namespace

BasisSet random_bases(Index n, Index k, std::uint64_t seed) {
    if (n < 2 || k < 1) throw InvalidInput("random_bases: need n >= 2 and k >= 1");
    Rng rng(Rng::derive(seed, 0xBA5E));
    BasisSet b = BasisSet::zeros(n, k);
    for (Index i = 0; i < k; ++i) b.bases[i] = random_unit_basis(n, rng);
    return b;
}

BasisSet init_bases_pca(std::span<const NetworkEstimate> estimates, Index k, std::uint64_t seed,
                        std::vector<std::string>* warnings) {
    if (estimates.empty()) throw InvalidInput("init_bases_pca: no estimates");
    if (k < 1) throw InvalidInput("init_bases_pca: k must be >= 1");
    const Index n = estimates.front().coefficients.rows();
    if (n < 2) throw InvalidInput("init_bases_pca: need n >= 2");

    const Index p = n * (n - 1) / 2;
    Matrix stacked(static_cast<Index>(estimates.size()), p);
    for (std::size_t s = 0; s < estimates.size(); ++s) {
        const Matrix& a = estimates[s].coefficients;
        if (a.rows() != n || a.cols() != n)
            throw InvalidInput("init_bases_pca: estimates differ in dimension");
        stacked.row(static_cast<Index>(s)) = vec_upper(0.5 * (a + a.transpose())).transpose();
    }
    if (stacked.cwiseAbs().maxCoeff() == 0.0)
        throw DegenerateProblem("init_bases_pca: every estimate is zero");

    const Index full = std::min(stacked.rows(), p);
    const ThinSvd svd = thin_svd(stacked, full);
    const double top = svd.values(0);
    Index rank = 0;
    while (rank < full && svd.values(rank) > 1e-10 * top) ++rank;

    BasisSet out = BasisSet::zeros(n, k);
    const Index from_svd = std::min(k, rank);
    for (Index i = 0; i < from_svd; ++i) {
        Vector v = svd.right.col(i);
        v /= v.norm();
        fix_sign(v);
        out.bases[i] = unvec_upper(v, n);
    }
    if (from_svd < k) {
        if (warnings)
            warnings->push_back("init_bases_pca: estimates have rank " + std::to_string(rank) +
                                " < k = " + std::to_string(k) +
                                "; remaining bases are seeded random structures");
        Rng rng(Rng::derive(seed, 0xF111));
        for (Index i = from_svd; i < k; ++i) out.bases[i] = random_unit_basis(n, rng);
    }
    return out;
}

BasisSet initial_bases(const ObservationSequence& x, const FitConfig& config,
                       std::vector<std::string>* warnings) {
    if (config.init == InitMode::random) return random_bases(x.dim(), config.k, config.seed);
    const auto times = all_times(x.length());
    const auto estimates = fit_sequence(x, config.kernel, config.keller_lambda, times, config.exec);
    return init_bases_pca(estimates, config.k, config.seed, warnings);
}

// ------------------------------------------------------------ fit

FitResult fit(const ObservationSequence& x, const FitConfig& config,
              const std::optional<BasisSet>& init) {
    config.validate();
    if (x.length() < 1) throw InvalidInput("fit: empty sequence");
    if (x.dim() < 2) throw InvalidInput("fit: need at least two dimensions");
    if (!x.data.allFinite()) throw InvalidInput("fit: non-finite observation");

    std::vector<std::string> warnings;
    BasisSet bases = init ? *init : initial_bases(x, config, &warnings);
    const auto moments = local_second_moments(x.data, config.kernel, config.exec);
    FitResult res = detail::run_fit(x, moments, config, std::move(bases), nullptr);
    res.warnings.insert(res.warnings.begin(), warnings.begin(), warnings.end());
    return res;
}

namespace detail {

namespace {

std::vector<Index> sample_batch(Index length, Index size, Rng& rng) {
    std::vector<Index> pool = all_times(length);
    for (Index i = 0; i < size; ++i) {
        const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(length - i)));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(size));
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace

FitResult run_fit(const ObservationSequence& x, std::span<const Matrix> moments,
                  const FitConfig& config, BasisSet bases, const SupervisedHooks* hooks) {
    bases.validate();
    if (bases.k != config.k) throw InvalidInput("fit: initial bases do not match k");
    if (bases.n != x.dim()) throw InvalidInput("fit: initial bases do not match dimension");

    const Index length = x.length();
    const bool full_batch = config.batch_size == 0 || config.batch_size >= length;
    const Index batch_size = full_batch ? length : config.batch_size;
    const Index pass_length = (length + batch_size - 1) / batch_size;
    const double scale = static_cast<double>(length) / static_cast<double>(batch_size);
    const double gamma = hooks ? hooks->gamma : 1.0;
    const bool supervised = hooks && gamma < 1.0;
    const ElasticNetConfig coding = config.coding();
    const Exec exec = config.exec;

    Rng rng(Rng::derive(config.seed, 0xB47C));
    std::vector<Vector> codes = infer_codes_from_moments(bases, moments, coding, nullptr, exec);

    // Moments and codes restricted to a batch.
    auto gather = [&](std::span<const Index> batch, std::vector<Matrix>& m,
                      std::vector<Vector>& c) {
        m.clear();
        c.clear();
        for (Index t : batch) {
            m.push_back(moments[t]);
            c.push_back(codes[t]);
        }
    };

    // Smooth unsupervised part (fit + code penalty) over a batch, codes fixed.
    auto smooth_unsup = [&](const BasisSet& b, std::span<const Matrix> m,
                            std::span<const Vector> c) {
        std::vector<double> fits(c.size());
        parallel_for(exec, static_cast<Index>(c.size()), [&](Index i) {
            fits[i] = local_fit(b.combine(c[i]), m[i]);
        });
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i)
            s += fits[i] + code_penalty(c[i], config.lambda_beta, config.alpha);
        return scale * s;
    };

    // Full objective over every training time at unit scale.
    auto full_objective = [&](const BasisSet& b) {
        std::vector<double> fits(codes.size());
        parallel_for(exec, length, [&](Index t) {
            fits[t] = local_fit(b.combine(codes[t]), moments[t]);
        });
        double f = 0.0;
        for (Index t = 0; t < length; ++t)
            f += fits[t] + code_penalty(codes[t], config.lambda_beta, config.alpha);
        if (supervised) {
            const auto all = all_times(length);
            f = gamma * f + (1.0 - gamma) * hooks->loss(b, all, codes);
        }
        return f + config.lambda_A * basis_l1(b);
    };

    FitResult res;
    double last_step = 0.0;
    double pass_reference = full_objective(bases);
    int accepted_in_pass = 0;
    std::vector<Matrix> batch_moments;
    std::vector<Vector> batch_codes;

    for (int iter = 0; iter < config.max_outer_iters; ++iter) {
        res.iterations = iter + 1;
        const std::vector<Index> batch =
            full_batch ? all_times(length) : sample_batch(length, batch_size, rng);

        gather(batch, batch_moments, batch_codes);
        batch_codes = infer_codes_from_moments(bases, batch_moments, coding, &batch_codes, exec);
        for (std::size_t i = 0; i < batch.size(); ++i) codes[batch[i]] = batch_codes[i];

        if (hooks && hooks->refit) hooks->refit(bases, codes);

        std::vector<Matrix> grad =
            unsupervised_gradient_from_moments(bases, batch_codes, batch_moments, exec);
        for (Matrix& g : grad) g *= scale;
        double smooth0 = smooth_unsup(bases, batch_moments, batch_codes);

        if (supervised) {
            std::vector<Matrix> sup = hooks->gradient(bases, batch, codes);
            for (Matrix& g : sup) g *= scale;
            grad = combined_basis_gradient(grad, sup, gamma);
            smooth0 = gamma * smooth0 + (1.0 - gamma) * scale * hooks->loss(bases, batch, codes);
        }
        const double f0 = smooth0 + config.lambda_A * basis_l1(bases);

        double grad_norm = 0.0;
        for (const Matrix& g : grad) grad_norm += g.squaredNorm();
        grad_norm = std::sqrt(grad_norm);

        LineSearchConfig ls = config.line_search;
        ls.initial_step = last_step > 0.0 ? 2.0 * last_step
                          : grad_norm > 0.0 ? 1.0 / grad_norm
                                            : 1.0;
        const double gnorm2 = stationarity_norm_sq(bases, grad, config.lambda_A);

        auto step_bases = [&](double step) {
            BasisSet cand = bases;
            for (Index i = 0; i < bases.k; ++i)
                cand.bases[i] = proximal_l1_step(bases.bases[i], grad[i], step, config.lambda_A);
            return cand;
        };
        auto evaluate = [&](double step) {
            const BasisSet cand = step_bases(step);
            double s = smooth_unsup(cand, batch_moments, batch_codes);
            if (supervised)
                s = gamma * s + (1.0 - gamma) * scale * hooks->loss(cand, batch, codes);
            return s + config.lambda_A * basis_l1(cand);
        };

        const LineSearchResult found = line_search(f0, evaluate, gnorm2, ls);
        if (found.accepted) {
            if (gnorm2 > 0.0) {
                bases = step_bases(found.step);
                last_step = found.step;
            }
            res.objective_trace.push_back(found.objective);
            ++accepted_in_pass;
        } else {
            ++res.rejected_steps;
        }

        const bool pass_end = full_batch || (iter + 1) % pass_length == 0;
        if (!pass_end) continue;

        if (accepted_in_pass == 0) {
            res.converged = false;
            break;
        }
        accepted_in_pass = 0;

        double current;
        if (full_batch) {
            current = found.objective;
        } else {
            codes = infer_codes_from_moments(bases, moments, coding, &codes, exec);
            current = full_objective(bases);
        }
        const double change =
            std::abs(pass_reference - current) / std::max(std::abs(pass_reference), 1e-300);
        pass_reference = current;
        if (change < config.rel_tol) {
            res.converged = true;
            break;
        }
    }

    codes = infer_codes_from_moments(bases, moments, coding, &codes, exec);
    if (hooks && hooks->refit) hooks->refit(bases, codes);
    res.objective_trace.push_back(full_objective(bases));
    res.codes.resize(static_cast<std::size_t>(length));
    for (Index t = 0; t < length; ++t) res.codes[t] = {codes[t], t};
    res.bases = std::move(bases);
    return res;
}

} // namespace detail

// ------------------------------------------------------------ reference

namespace reference {

std::vector<StructureCode> infer_codes(const BasisSet& bases, const ObservationSequence& x,
                                       const KernelSpec& kernel, double lambda_beta,
                                       double alpha, std::span<const Index> times, double tol) {
    bases.validate();
    check_times(times, x.length());
    ElasticNetConfig config = coding_config(lambda_beta, alpha, tol);
    config.check_psd = true;

    std::vector<StructureCode> out;
    for (Index t : times) {
        const KernelWindow win = kernel_window(t, x.length(), kernel);
        std::vector<Matrix> dicts;
        std::vector<Vector> targets;
        for (Index s = win.begin; s < win.end; ++s) {
            const Vector xs = x.row(s);
            dicts.push_back(pseudo_dictionary(bases, xs));
            targets.push_back(xs);
        }
        const QuadraticProblem p = build_weighted_problem(dicts, targets, win.weights);
        out.push_back({solve_elastic_net(p, config).beta, t});
    }
    return out;
}

std::vector<Matrix> unsupervised_basis_gradient(const BasisSet& bases,
                                                std::span<const StructureCode> codes,
                                                const ObservationSequence& x,
                                                const KernelSpec& kernel) {
    const Index n = bases.n;
    std::vector<Matrix> grad(static_cast<std::size_t>(bases.k), Matrix::Zero(n, n));
    for (const auto& c : codes) {
        const KernelWindow win = kernel_window(c.time, x.length(), kernel);
        for (Index s = win.begin; s < win.end; ++s) {
            const double w = win.weights[static_cast<std::size_t>(s - win.begin)];
            const Vector xs = x.row(s);
            const Matrix d = pseudo_dictionary(bases, xs);
            const Matrix dd = w * (-2.0) * (xs - d * c.code) * c.code.transpose();
            for (Index i = 0; i < bases.k; ++i) grad[i] += dd.col(i) * xs.transpose();
        }
    }
    for (Matrix& g : grad) project_symmetric_zero_diagonal(g);
    return grad;
}

} // namespace reference

} // namespace tvnet
