#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "bmseg/mesh.hpp"

namespace bmseg {

struct AugmentConfig {
    int count = 40;
    double rotation_max_deg = 30.0;           // per axis, uniform in [-max, max]
    double translation_max = 0.1;             // per component, normalized units
    std::array<double, 2> scale_range = {0.8, 1.2};
    std::uint64_t seed = 0;
    // Re-run unit-sphere normalization on the transformed coordinates. Off by
    // default so translation/rescale variants survive into the materialized
    // samples; flip on to study normalization-after-augmentation.
    bool renormalize = false;

    void validate() const;
};

// Rotation from per-axis angles (degrees), applied as Rz * Ry * Rx.
Eigen::Matrix3d rotation_from_euler_deg(double rx, double ry, double rz);

// Every coordinate block x -> s * x * R^T + t (row-vector convention), every
// normal block n -> n * R^T renormalized; labels and barycenter/feature
// alignment preserved. R must be a proper rotation within 1e-6.
CellCloud apply_rigid_similarity(const CellCloud& cloud, const Eigen::Matrix3d& rotation,
                                 const Eigen::RowVector3d& translation, double scale);

// cfg.count independent variants, deterministic in cfg.seed. Per variant the
// draw order is fixed: three rotation angles, three translation components,
// one scale factor.
std::vector<CellCloud> generate_augmentations(const CellCloud& cloud, const AugmentConfig& cfg);

} // namespace bmseg
