#pragma once

#include <memory>
#include <string>

#include "bmseg/curve_branch.hpp"
#include "bmseg/geometry_branch.hpp"
#include "bmseg/mesh.hpp"
#include "bmseg/seg_head.hpp"

namespace bmseg {

// The five network configurations of the ablation matrix:
//   Ours      geometry (barycenter+normal, 6D) + curve (3D) + fused head
//   Ablation1 geometry branch alone on the 24D representation
//   Ablation2 geometry branch alone on barycenter+normal (6D)
//   Ablation3 geometry branch alone on barycenter only (3D)
//   Ablation4 curve branch alone on barycenter only (3D)
enum class Ablation { Ours, Ablation1, Ablation2, Ablation3, Ablation4 };

const char* to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);

// Feature columns each ablation consumes. Input clouds must carry at least
// the needed blocks (a BVN24 cloud serves every ablation; a BN cloud serves
// all but Ablation1).
int ablation_in_dim(Ablation a);
Eigen::MatrixXd slice_features(const CellCloud& cloud, Ablation a);

struct ModelConfig {
    Ablation ablation = Ablation::Ours;
    int points = 1024;    // stage ladders are derived from this cell count
    int embed_dim = 64;   // geometry embedding / first-stage channel width
    int branch_out = 256; // per-branch per-cell feature width
    int head_hidden = 256;
    double head_dropout = 0.5;
    int curve_k = 20;
    int n_curves = 16;
    int curve_length = 8;
    int geometry_k = 24;

    GeometryBranchConfig geometry_config() const;
    CurveBranchConfig curve_config() const;
    HeadConfig head_config() const;
};

class SegModel {
public:
    SegModel(const ModelConfig& cfg, Rng& rng);

    // One cloud at a time. feats must match ablation_in_dim; barycenters are
    // the grouping coordinates. Returns N x 8 logits.
    nn::Var forward(nn::Tape& t, nn::Var feats, const Eigen::MatrixXd& barycenters,
                    bool training, Rng* dropout_rng);

    // Convenience: slice the cloud, run eval-mode forward, argmax per cell.
    std::vector<int> predict(const CellCloud& cloud);

    std::vector<nn::Parameter*> parameters();
    const ModelConfig& config() const { return cfg_; }
    bool has_geometry() const { return geometry_ != nullptr; }
    bool has_curve() const { return curve_ != nullptr; }

private:
    ModelConfig cfg_;
    std::unique_ptr<GeometryBranch> geometry_;
    std::unique_ptr<CurveBranch> curve_;
    SegHead head_;
};

SegModel build_model(Ablation ablation, const ModelConfig& base, Rng& rng);

} // namespace bmseg
