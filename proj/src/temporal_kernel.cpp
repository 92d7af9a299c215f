#include "tvnet/temporal_kernel.hpp"

#include <cmath>
#include <numeric>

#include "tvnet/errors.hpp"

namespace tvnet {

std::string to_string(KernelFamily family) {
    switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::boxcar: return "boxcar";
    case KernelFamily::epanechnikov: return "epanechnikov";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "gaussian") return KernelFamily::gaussian;
    if (name == "boxcar") return KernelFamily::boxcar;
    if (name == "epanechnikov") return KernelFamily::epanechnikov;
    throw InvalidInput("unknown kernel family '" + name + "'");
}

void KernelSpec::validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw InvalidInput("kernel: bandwidth must be finite and > 0");
    if (!(truncation > 0.0)) throw InvalidInput("kernel: truncation must be > 0");
}

double KernelSpec::support_radius() const {
    const double cut = truncation * bandwidth;
    switch (family) {
    case KernelFamily::gaussian: return cut;
    case KernelFamily::boxcar:
    case KernelFamily::epanechnikov: return std::min(cut, bandwidth);
    }
    return cut;
}

double weight(double t, double t_prime, const KernelSpec& spec) {
    spec.validate();
    const double u = (t - t_prime) / spec.bandwidth;
    switch (spec.family) {
    case KernelFamily::gaussian: return std::exp(-0.5 * u * u);
    case KernelFamily::boxcar: return std::abs(u) <= 1.0 ? 1.0 : 0.0;
    case KernelFamily::epanechnikov: return std::max(0.0, 1.0 - u * u);
    }
    return 0.0;
}

namespace {

double truncated_weight(Index t, Index s, const KernelSpec& spec) {
    const double d = std::abs(static_cast<double>(t - s));
    if (d > spec.truncation * spec.bandwidth) return 0.0;
    return weight(static_cast<double>(t), static_cast<double>(s), spec);
}

void normalize_in_place(std::vector<double>& w, const KernelSpec& spec) {
    if (!spec.normalize) return;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0))
        throw DegenerateProblem("kernel: every weight in the window is zero");
    for (double& v : w) v /= total;
}

} // namespace

std::vector<double> weight_profile(Index t, std::span<const Index> indices,
                                   const KernelSpec& spec) {
    spec.validate();
    if (indices.empty()) throw InvalidInput("weight_profile: empty index set");
    std::vector<double> w;
    w.reserve(indices.size());
    for (Index s : indices) w.push_back(truncated_weight(t, s, spec));
    normalize_in_place(w, spec);
    return w;
}

KernelWindow kernel_window(Index t, Index length, const KernelSpec& spec) {
    spec.validate();
    if (length < 1) throw InvalidInput("kernel_window: empty sequence");
    if (t < 0 || t >= length) throw InvalidInput("kernel_window: target outside sequence");
    const auto radius = static_cast<Index>(std::floor(spec.support_radius()));
    KernelWindow win;
    win.begin = std::max<Index>(0, t - radius);
    win.end = std::min<Index>(length, t + radius + 1);
    win.weights.reserve(static_cast<std::size_t>(win.size()));
    for (Index s = win.begin; s < win.end; ++s) win.weights.push_back(truncated_weight(t, s, spec));
    normalize_in_place(win.weights, spec);
    return win;
}

} // namespace tvnet
