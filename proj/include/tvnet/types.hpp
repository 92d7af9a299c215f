#pragma once
#include <Eigen/Dense>
#include <vector>

namespace tvnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Selects between the OpenMP kernels and their single-threaded form.
// Both produce bitwise-identical results; reductions are index ordered.
enum class Exec { serial, parallel };

/// Time-ordered observations, one row per time step (T x n), with optional
/// per-time labels in {-1, +1}. Time indices are 0-based throughout.
struct ObservationSequence {
    Matrix data;
    std::vector<int> labels;

    Index length() const { return data.rows(); }
    Index dim() const { return data.cols(); }
    bool has_labels() const { return !labels.empty(); }
    auto row(Index t) const { return data.row(t).transpose(); }
};

} // namespace tvnet
