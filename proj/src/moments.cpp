#include "tvnet/moments.hpp"

#include <numeric>
#include <stdexcept>

#include "tvnet/errors.hpp"
#include "tvnet/parallel.hpp"

namespace tvnet {

std::vector<Index> all_times(Index length) {
    std::vector<Index> t(static_cast<std::size_t>(std::max<Index>(length, 0)));
    std::iota(t.begin(), t.end(), Index{0});
    return t;
}

std::vector<Matrix> local_second_moments(const Matrix& data, std::span<const Index> targets,
                                         const KernelSpec& spec, Exec exec) {
    spec.validate();
    const Index length = data.rows();
    for (Index t : targets)
        if (t < 0 || t >= length) throw InvalidInput("local_second_moments: target out of range");

    std::vector<Matrix> out(targets.size());
    parallel_for(exec, static_cast<Index>(targets.size()), [&](Index i) {
        const KernelWindow win = kernel_window(targets[i], length, spec);
        const Eigen::Map<const Vector> w(win.weights.data(), win.size());
        const auto rows = data.middleRows(win.begin, win.size());
        Matrix s = rows.transpose() * (w.asDiagonal() * rows);
        out[i] = 0.5 * (s + s.transpose());
    });
    return out;
}

std::vector<Matrix> local_second_moments(const Matrix& data, const KernelSpec& spec, Exec exec) {
    const auto t = all_times(data.rows());
    return local_second_moments(data, t, spec, exec);
}

} // namespace tvnet
