#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "bmseg/nn/modules.hpp"
#include "bmseg/nn/point_ops.hpp"

namespace bmseg {

struct GeometryStageConfig {
    int points = 0;   // centers sampled at this stage
    int k = 24;       // neighborhood size for grouping
    int pre_blocks = 1;
    int pos_blocks = 1;
    int channels = 0;
};

struct GeometryBranchConfig {
    int in_dim = 6;
    int embed_dim = 64;
    std::vector<GeometryStageConfig> stages;
    int decoder_k = 3;
    int out_dim = 256;

    // Four stages at N, N/4, N/16, N/64 points with channels scaling
    // embed_dim, 2x, 4x, 8x.
    static GeometryBranchConfig defaults(int n_points, int in_dim = 6, int embed_dim = 64);
    void validate() const;
};

// Hierarchical per-cell feature extractor: each encoder stage samples centers
// by farthest-point sampling, groups k nearest neighbors, normalizes the
// grouped differences with the geometric affine module, lifts and refines
// them with residual point blocks, max-pools over the neighborhood, and
// refines the pooled features again. The decoder propagates features back to
// full resolution with inverse-distance interpolation and per-stage skip
// fusion.
class GeometryBranch {
public:
    GeometryBranch(const GeometryBranchConfig& cfg, Rng& rng,
                   const std::string& name = "geometry");

    // feats: N x in_dim (tape node so tests can differentiate through it),
    // barycenters: N x 3 grouping coordinates. Returns N x out_dim.
    nn::Var forward(nn::Tape& t, nn::Var feats, const Eigen::MatrixXd& barycenters);

    void collect(std::vector<nn::Parameter*>& out);
    const GeometryBranchConfig& config() const { return cfg_; }

private:
    struct Stage {
        GeometryStageConfig cfg;
        nn::GamParams gam;
        nn::MlpBlock lift; // 2 * C_prev -> channels, applied per neighbor
        std::vector<nn::RespBlock> pre, pos;
    };
    struct DecoderLevel {
        nn::MlpBlock fuse; // C_coarse + C_skip -> C_skip
    };

    GeometryBranchConfig cfg_;
    nn::MlpBlock embed_;
    std::vector<Stage> stages_;
    std::vector<DecoderLevel> decoder_; // decoder_[i] fuses level i+1 -> i
    nn::Linear out_proj_;
};

} // namespace bmseg
