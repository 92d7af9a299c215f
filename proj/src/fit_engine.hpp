#pragma once
#include <functional>
#include <span>
#include <vector>

#include "tvnet/basis.hpp"

namespace tvnet::detail {

// Supervised extension of the basis fit. With gamma == 1 the engine never
// calls loss() or gradient(), so the basis trajectory is exactly the
// unsupervised one.
struct SupervisedHooks {
    double gamma = 1.0;
    // Once per outer iteration, with the codes of every training time.
    std::function<void(const BasisSet&, const std::vector<Vector>&)> refit;
    // Sum of per-time supervised losses over `batch` at `bases`; codes are
    // re-solved starting from `codes`.
    std::function<double(const BasisSet&, std::span<const Index>, const std::vector<Vector>&)>
        loss;
    // Basis gradients of that loss given the current codes (projected).
    std::function<std::vector<Matrix>(const BasisSet&, std::span<const Index>,
                                      const std::vector<Vector>&)>
        gradient;
};

// moments[t] is the local second moment of training time t.
FitResult run_fit(const ObservationSequence& x, std::span<const Matrix> moments,
                  const FitConfig& config, BasisSet bases, const SupervisedHooks* hooks);

} // namespace tvnet::detail
