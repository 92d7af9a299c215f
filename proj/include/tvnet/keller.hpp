#pragma once
#include <span>
#include <utility>
#include <vector>

#include "tvnet/elastic_net.hpp"
#include "tvnet/temporal_kernel.hpp"
#include "tvnet/types.hpp"

namespace tvnet {

/// Locally weighted self-regression coefficients at one time point. Row i
/// holds the lasso coefficients predicting dimension i from the others; the
/// diagonal is exactly zero.
struct NetworkEstimate {
    Matrix coefficients;
    Index time = 0;
    double lambda = 0.0;
    bool converged = true;
    // Set when some column of the input had |mean| > 1e-6.
    bool not_standardized = false;
};

/// Unordered vertex pairs stored as (i, j) with i < j, sorted.
struct EdgeSet {
    std::vector<std::pair<Index, Index>> edges;

    bool contains(Index i, Index j) const;
    std::size_t size() const { return edges.size(); }
};

struct KellerOptions {
    double tol = 1e-8;
    int max_sweeps = 10000;
};

bool is_standardized(const Matrix& data, double tol = 1e-6);

/// Kernel-weighted l1 self-regression at time t, solved as n independent
/// row lassos on the local second moment around t.
NetworkEstimate estimate_structure_at(const ObservationSequence& x, Index t,
                                      const KernelSpec& spec, double lambda,
                                      const KellerOptions& options = {});

/// estimate_structure_at for every requested time; time points are solved
/// concurrently and returned in request order.
std::vector<NetworkEstimate> fit_sequence(const ObservationSequence& x, const KernelSpec& spec,
                                          double lambda, std::span<const Index> times,
                                          Exec exec = Exec::parallel,
                                          const KellerOptions& options = {});

/// Edge (i, j) present iff |A_ij| > threshold or |A_ji| > threshold.
EdgeSet symmetrize_edges(const NetworkEstimate& estimate, double threshold = 0.0);

/// rho_ij = -p_ij / sqrt(p_ii p_jj) with unit diagonal. Throws InvalidInput
/// for a precision that is not symmetric positive definite.
Matrix precision_to_partial_corr(const Matrix& precision);

/// Population self-regression coefficients rho~_ij = -p_ij / p_ii (zero diagonal).
Matrix precision_to_regression(const Matrix& precision);

struct PartialCorrelation {
    double value = 0.0;
    bool sign_mismatch = false;
};

/// sign(r_ij) sqrt(r_ij r_ji). Opposite signs cannot occur at the population
/// level; for sampled estimates they yield 0 with sign_mismatch set.
PartialCorrelation regression_to_partial_corr(double rho_ij, double rho_ji);

namespace reference {

/// Row-by-row weighted lassos on the raw windowed observations.
NetworkEstimate estimate_structure_at(const ObservationSequence& x, Index t,
                                      const KernelSpec& spec, double lambda,
                                      const KellerOptions& options = {});

} // namespace reference

} // namespace tvnet
