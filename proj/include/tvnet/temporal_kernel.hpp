#pragma once
#include <span>
#include <string>
#include <vector>

#include "tvnet/types.hpp"

namespace tvnet {

enum class KernelFamily { gaussian, boxcar, epanechnikov };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Temporal proximity kernel k(t, t'). Weights with |t - t'| > truncation *
/// bandwidth are forced to zero; with normalize set, the weights for one
/// target over an index set sum to 1.
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double bandwidth = 1.0;
    double truncation = 3.0;
    bool normalize = true;

    void validate() const;
    // Largest |t - t'| that can receive a nonzero weight.
    double support_radius() const;
};

/// Raw family formula, before truncation and normalization.
double weight(double t, double t_prime, const KernelSpec& spec);

/// Weights of `indices` relative to target t. Throws DegenerateProblem when
/// normalization is requested and every weight is zero.
std::vector<double> weight_profile(Index t, std::span<const Index> indices,
                                   const KernelSpec& spec);

/// Weights of the contiguous range [begin, end) of a sequence of the given
/// length that falls inside the kernel support around t.
struct KernelWindow {
    Index begin = 0;
    Index end = 0;
    std::vector<double> weights;

    Index size() const { return end - begin; }
};

KernelWindow kernel_window(Index t, Index length, const KernelSpec& spec);

} // namespace tvnet
