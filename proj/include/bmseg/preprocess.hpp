#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

#include "bmseg/mesh.hpp"

namespace bmseg {

struct DecimationConfig {
    int target_cells = 16000;
    bool preserve_boundary = true;
    std::optional<double> max_quadric_error; // none = no cost ceiling
};

struct LabelTransferConfig {
    int k = 3; // odd; ties between vote counts resolve to the lowest class id
};

// Majority vote over the k source points nearest to each cell barycenter.
// Sources are the ORIGINAL scan vertices with already-mapped class labels;
// the decimated mesh never carries labels through collapses.
std::vector<int> transfer_labels_knn(const Eigen::MatrixXd& source_points,
                                     const std::vector<int>& source_labels,
                                     const CellCloud& target,
                                     const LabelTransferConfig& cfg = {});

// Maps normalized coordinates back to scanner space: x = x_n * scale + center.
struct NormalizationRecord {
    Eigen::RowVector3d center = Eigen::RowVector3d::Zero();
    double scale = 1.0;

    Eigen::RowVector3d to_scanner(const Eigen::RowVector3d& x) const {
        return x * scale + center;
    }
    Eigen::RowVector3d to_normalized(const Eigen::RowVector3d& x) const {
        return (x - center) / scale;
    }
};

// Translate so the barycenter centroid sits at the origin and scale so the
// farthest barycenter lies on the unit sphere. The same translation/scale is
// applied to every coordinate block (vertices in BVN24); normal blocks are
// untouched.
std::pair<CellCloud, NormalizationRecord> normalize_cloud(const CellCloud& cloud);

} // namespace bmseg
