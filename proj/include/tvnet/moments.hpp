#pragma once
#include <span>
#include <vector>

#include "tvnet/temporal_kernel.hpp"
#include "tvnet/types.hpp"

namespace tvnet {

/// Kernel-weighted local second moments S_t = sum_t' k(t, t') x_t' x_t'^T,
/// one per target time. Every kernel-weighted squared-error term of the form
/// sum_t' k(t, t') |x_t' - M x_t'|^2 equals tr((I - M) S_t (I - M)^T), so the
/// coding problems, objective and gradients only need these matrices.
std::vector<Matrix> local_second_moments(const Matrix& data, std::span<const Index> targets,
                                         const KernelSpec& spec, Exec exec = Exec::parallel);

/// All targets 0..T-1.
std::vector<Matrix> local_second_moments(const Matrix& data, const KernelSpec& spec,
                                         Exec exec = Exec::parallel);

std::vector<Index> all_times(Index length);

} // namespace tvnet
