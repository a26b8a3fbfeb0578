#include "bmseg/augment.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "bmseg/preprocess.hpp"

namespace bmseg {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kOrthoTol = 1e-6;
} // namespace

void AugmentConfig::validate() const {
    if (count < 1) throw ConfigError("augmentation count must be >= 1");
    if (scale_range[0] <= 0.0) throw ConfigError("scale range lower bound must be positive");
    if (scale_range[0] > scale_range[1]) throw ConfigError("scale range must satisfy lo <= hi");
    if (rotation_max_deg < 0.0 || translation_max < 0.0) {
        throw ConfigError("augmentation ranges must be non-negative");
    }
}

Eigen::Matrix3d rotation_from_euler_deg(double rx, double ry, double rz) {
    const double ax = rx * kPi / 180.0, ay = ry * kPi / 180.0, az = rz * kPi / 180.0;
    Eigen::Matrix3d mx, my, mz;
    mx << 1, 0, 0, 0, std::cos(ax), -std::sin(ax), 0, std::sin(ax), std::cos(ax);
    my << std::cos(ay), 0, std::sin(ay), 0, 1, 0, -std::sin(ay), 0, std::cos(ay);
    mz << std::cos(az), -std::sin(az), 0, std::sin(az), std::cos(az), 0, 0, 0, 1;
    return mz * my * mx;
}

CellCloud apply_rigid_similarity(const CellCloud& cloud, const Eigen::Matrix3d& rotation,
                                 const Eigen::RowVector3d& translation, double scale) {
    if (scale <= 0.0) throw ConfigError("similarity scale must be positive");
    const Eigen::Matrix3d residual =
        rotation * rotation.transpose() - Eigen::Matrix3d::Identity();
    if (residual.cwiseAbs().maxCoeff() > kOrthoTol || rotation.determinant() < 1.0 - kOrthoTol) {
        throw ValidationError("rotation matrix is not a proper rotation (orthogonal, det +1)");
    }

    CellCloud out = cloud;
    const Eigen::Matrix3d rt = rotation.transpose();
    out.barycenters = (scale * (cloud.barycenters * rt)).rowwise() + translation;
    for (int off : coordinate_block_offsets(cloud.mode)) {
        out.features.middleCols(off, 3) =
            (scale * (cloud.features.middleCols(off, 3) * rt)).rowwise() + translation;
    }
    for (int off : normal_block_offsets(cloud.mode)) {
        Eigen::MatrixXd block = cloud.features.middleCols(off, 3) * rt;
        for (int i = 0; i < block.rows(); ++i) {
            const double len = block.row(i).norm();
            if (len > 1e-20) block.row(i) /= len;
        }
        out.features.middleCols(off, 3) = block;
    }
    return out;
}

std::vector<CellCloud> generate_augmentations(const CellCloud& cloud, const AugmentConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::vector<CellCloud> out;
    out.reserve(cfg.count);
    for (int i = 0; i < cfg.count; ++i) {
        const double rx = rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg);
        const double ry = rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg);
        const double rz = rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg);
        const Eigen::RowVector3d t(rng.uniform(-cfg.translation_max, cfg.translation_max),
                                   rng.uniform(-cfg.translation_max, cfg.translation_max),
                                   rng.uniform(-cfg.translation_max, cfg.translation_max));
        const double s = rng.uniform(cfg.scale_range[0], cfg.scale_range[1]);
        CellCloud variant =
            apply_rigid_similarity(cloud, rotation_from_euler_deg(rx, ry, rz), t, s);
        if (cfg.renormalize) {
            variant = normalize_cloud(variant).first;
        }
        out.push_back(std::move(variant));
    }
    return out;
}

} // namespace bmseg
