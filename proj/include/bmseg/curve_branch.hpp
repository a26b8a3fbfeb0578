#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "bmseg/nn/modules.hpp"
#include "bmseg/nn/point_ops.hpp"

namespace bmseg {

struct CurveStageConfig {
    int points = 0;
    int channels = 0;
};

struct CurveBranchConfig {
    int k = 20;           // lpfa / walk neighborhood
    int n_curves = 16;
    int curve_length = 8; // positions per curve, including the start
    std::vector<CurveStageConfig> cic_stages;
    int out_dim = 256;

    static CurveBranchConfig defaults(int n_points, int base_channels = 64);
    void validate() const;
};

// Walks grown over a point set: each row of indices is one curve (kNN-adjacent
// consecutive cells, no immediate backtracking unless the neighborhood forces
// it); descriptors hold the aggregated per-curve features.
struct CurveSet {
    Eigen::MatrixXi indices;     // n_curves x curve_length
    Eigen::MatrixXd descriptors; // n_curves x C (value snapshot)
};

// Local point feature aggregation: for each query, encode every neighbor as
// [feat_j | feat_j - feat_i | p_j - p_i], push it through a shared MLP and
// max-pool over the neighborhood. With positions_only (the branch embedding)
// the encoding is just [p_j - p_i].
struct Lpfa {
    int k = 20;
    bool positions_only = false;
    nn::MlpBlock enc;

    Lpfa() = default;
    Lpfa(const std::string& name, int in_channels, int out_channels, int k, Rng& rng);

    // query_idx selects the rows of ref_pts that act as queries (pass
    // 0..M-1 for the self-contained form). feats may be null only in
    // positions_only mode.
    nn::Var forward(nn::Tape& t, const Eigen::MatrixXd& ref_pts, nn::Var feats,
                    const std::vector<int>& query_idx);
};

// Learned scoring picks the walk starts; each step scores the current kNN
// candidates against the running mean of visited features, masks the
// previous position, and takes a softmax-weighted soft selection while
// training (argmax features in eval). Argmax indices are always what the
// CurveSet records.
struct CurveWalker {
    int n_curves = 16;
    int curve_length = 8;
    int k = 20;
    nn::MlpBlock score_hidden;
    nn::Linear score_out;
    nn::MlpBlock compat_hidden;
    nn::Linear compat_out;

    CurveWalker() = default;
    CurveWalker(const std::string& name, int channels, int n_curves, int curve_length, int k,
                Rng& rng);

    struct Result {
        CurveSet curves;
        nn::Var step_mean = nullptr; // n_curves x C, mean over walked features
        nn::Var step_max = nullptr;  // n_curves x C, max over walked features
    };
    Result walk(nn::Tape& t, nn::Var feats, const Eigen::MatrixXd& pts, bool training);
};

// Curve descriptors from pooled walk features; points attend over the
// descriptors (dot-product attention over curves) and the attended vector is
// fused back through a residual MLP.
struct CurveAggregator {
    nn::MlpBlock desc;  // 2C -> C over [mean | max]
    nn::Linear proj_q, proj_k, proj_v;
    nn::Linear fuse;    // 2C -> C, residual

    CurveAggregator() = default;
    CurveAggregator(const std::string& name, int channels, Rng& rng);

    nn::Var aggregate(nn::Tape& t, nn::Var feats, nn::Var step_mean, nn::Var step_max,
                      Eigen::MatrixXd* descriptors_out = nullptr);
};

// One curve intervention convolution block: optional FPS downsampling to
// stage.points, lpfa re-encoding, curve walk and aggregation.
struct CicBlock {
    CurveStageConfig cfg;
    Lpfa lpfa;
    CurveWalker walker;
    CurveAggregator agg;

    CicBlock() = default;
    CicBlock(const std::string& name, int in_channels, const CurveStageConfig& cfg, int k,
             int n_curves, int curve_length, Rng& rng);

    struct Result {
        nn::Var feats = nullptr;
        Eigen::MatrixXd pts;
        CurveSet curves;
    };
    Result forward(nn::Tape& t, nn::Var feats, const Eigen::MatrixXd& pts, bool training);
};

// Full branch over barycenter coordinates only: lpfa embedding, cic encoder
// ladder, then feature propagation with an up-CIC block at each restored
// resolution.
class CurveBranch {
public:
    CurveBranch(const CurveBranchConfig& cfg, Rng& rng, const std::string& name = "curve");

    nn::Var forward(nn::Tape& t, const Eigen::MatrixXd& barycenters, bool training,
                    std::vector<CurveSet>* curves_out = nullptr);

    void collect(std::vector<nn::Parameter*>& out);
    const CurveBranchConfig& config() const { return cfg_; }

private:
    CurveBranchConfig cfg_;
    Lpfa embed_;
    std::vector<CicBlock> encoder_;
    struct DecoderLevel {
        nn::MlpBlock fuse;
        CicBlock up_cic;
    };
    std::vector<DecoderLevel> decoder_;
    nn::Linear out_proj_;
    int decoder_k_ = 3;
};

} // namespace bmseg
