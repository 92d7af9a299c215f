#include "tvnet/keller.hpp"

#include <algorithm>
#include <cmath>

#include "tvnet/errors.hpp"
#include "tvnet/linalg.hpp"
#include "tvnet/moments.hpp"
#include "tvnet/parallel.hpp"

namespace tvnet {

bool EdgeSet::contains(Index i, Index j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

bool is_standardized(const Matrix& data, double tol) {
    if (data.rows() == 0) return true;
    return (data.colwise().mean().array().abs() <= tol).all();
}

namespace {

void check_inputs(const ObservationSequence& x, Index t, double lambda) {
    if (x.length() < 1) throw InvalidInput("keller: empty sequence");
    if (t < 0 || t >= x.length()) throw InvalidInput("keller: time index out of range");
    if (!(lambda >= 0.0)) throw InvalidInput("keller: lambda must be >= 0");
}

// Indices 0..n-1 without i.
std::vector<Index> others(Index n, Index i) {
    std::vector<Index> idx;
    idx.reserve(static_cast<std::size_t>(n - 1));
    for (Index j = 0; j < n; ++j)
        if (j != i) idx.push_back(j);
    return idx;
}

NetworkEstimate from_moment(const Matrix& s, Index t, double lambda, const KellerOptions& options) {
    const Index n = s.rows();
    NetworkEstimate est;
    est.coefficients = Matrix::Zero(n, n);
    est.time = t;
    est.lambda = lambda;

    ElasticNetConfig config;
    config.lambda = lambda;
    config.alpha = 0.0;
    config.tol = options.tol;
    config.max_sweeps = options.max_sweeps;
    config.check_psd = false; // a weighted second moment is PSD by construction

    for (Index i = 0; i < n; ++i) {
        const auto idx = others(n, i);
        QuadraticProblem p{s(idx, idx), s(idx, i), s(i, i)};
        const ElasticNetResult r = solve_elastic_net(p, config);
        est.converged = est.converged && r.converged;
        for (std::size_t a = 0; a < idx.size(); ++a) est.coefficients(i, idx[a]) = r.beta(a);
    }
    return est;
}

} // namespace

NetworkEstimate estimate_structure_at(const ObservationSequence& x, Index t,
                                      const KernelSpec& spec, double lambda,
                                      const KellerOptions& options) {
    check_inputs(x, t, lambda);
    const Index target[] = {t};
    const auto moments = local_second_moments(x.data, target, spec, Exec::serial);
    NetworkEstimate est = from_moment(moments.front(), t, lambda, options);
    est.not_standardized = !is_standardized(x.data);
    return est;
}

std::vector<NetworkEstimate> fit_sequence(const ObservationSequence& x, const KernelSpec& spec,
                                          double lambda, std::span<const Index> times, Exec exec,
                                          const KellerOptions& options) {
    for (Index t : times) check_inputs(x, t, lambda);
    if (times.empty()) return {};
    const bool flagged = !is_standardized(x.data);
    const auto moments = local_second_moments(x.data, times, spec, exec);

    std::vector<NetworkEstimate> out(times.size());
    parallel_for(exec, static_cast<Index>(times.size()), [&](Index i) {
        out[i] = from_moment(moments[i], times[i], lambda, options);
        out[i].not_standardized = flagged;
    });
    return out;
}

EdgeSet symmetrize_edges(const NetworkEstimate& estimate, double threshold) {
    const Matrix& a = estimate.coefficients;
    EdgeSet set;
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j)) > threshold || std::abs(a(j, i)) > threshold)
                set.edges.emplace_back(i, j);
    return set;
}

namespace {

void require_spd(const Matrix& precision, const char* who) {
    if (precision.rows() != precision.cols() || precision.rows() == 0)
        throw InvalidInput(std::string(who) + ": precision must be square and non-empty");
    const double scale = std::max(1.0, precision.cwiseAbs().maxCoeff());
    if (max_asymmetry(precision) > 1e-10 * scale)
        throw InvalidInput(std::string(who) + ": precision is not symmetric");
    try {
        (void)cholesky(precision);
    } catch (const NotPositiveDefinite& e) {
        throw InvalidInput(std::string(who) + ": precision is not positive definite (" +
                           e.what() + ")");
    }
}

} // namespace

Matrix precision_to_partial_corr(const Matrix& precision) {
    require_spd(precision, "precision_to_partial_corr");
    const Index n = precision.rows();
    Matrix rho(n, n);
    for (Index i = 0; i < n; ++i) {
        rho(i, i) = 1.0;
        for (Index j = i + 1; j < n; ++j) {
            const double v =
                -precision(i, j) / std::sqrt(precision(i, i) * precision(j, j));
            rho(i, j) = v;
            rho(j, i) = v;
        }
    }
    return rho;
}

Matrix precision_to_regression(const Matrix& precision) {
    require_spd(precision, "precision_to_regression");
    const Index n = precision.rows();
    Matrix r(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) r(i, j) = i == j ? 0.0 : -precision(i, j) / precision(i, i);
    return r;
}

PartialCorrelation regression_to_partial_corr(double rho_ij, double rho_ji) {
    if (rho_ij == 0.0 || rho_ji == 0.0) return {0.0, false};
    if ((rho_ij > 0.0) != (rho_ji > 0.0)) return {0.0, true};
    const double mag = std::sqrt(rho_ij * rho_ji);
    return {rho_ij > 0.0 ? mag : -mag, false};
}

namespace reference {

NetworkEstimate estimate_structure_at(const ObservationSequence& x, Index t,
                                      const KernelSpec& spec, double lambda,
                                      const KellerOptions& options) {
    check_inputs(x, t, lambda);
    const Index n = x.dim();
    const KernelWindow win = kernel_window(t, x.length(), spec);
    const Matrix rows = x.data.middleRows(win.begin, win.size());
    const Vector w = Eigen::Map<const Vector>(win.weights.data(), win.size());

    NetworkEstimate est;
    est.coefficients = Matrix::Zero(n, n);
    est.time = t;
    est.lambda = lambda;
    est.not_standardized = !is_standardized(x.data);
    for (Index i = 0; i < n; ++i) {
        const auto idx = others(n, i);
        const Matrix cov = rows(Eigen::all, idx);
        const Vector resp = rows.col(i);
        const ElasticNetResult r =
            solve_weighted_lasso(cov, resp, w, lambda, options.tol, options.max_sweeps);
        est.converged = est.converged && r.converged;
        for (std::size_t a = 0; a < idx.size(); ++a) est.coefficients(i, idx[a]) = r.beta(a);
    }
    return est;
}

} // namespace reference

} // namespace tvnet
