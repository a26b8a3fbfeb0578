#include "bmseg/geometry_branch.hpp"

namespace bmseg {

using namespace nn;

GeometryBranchConfig GeometryBranchConfig::defaults(int n_points, int in_dim, int embed_dim) {
    GeometryBranchConfig cfg;
    cfg.in_dim = in_dim;
    cfg.embed_dim = embed_dim;
    const int divisors[4] = {1, 4, 16, 64};
    for (int s = 0; s < 4; ++s) {
        GeometryStageConfig stage;
        stage.points = n_points / divisors[s];
        stage.k = 24;
        stage.pre_blocks = 1;
        stage.pos_blocks = 1;
        stage.channels = embed_dim << s;
        cfg.stages.push_back(stage);
    }
    return cfg;
}

void GeometryBranchConfig::validate() const {
    if (stages.empty()) throw ConfigError("geometry branch needs at least one stage");
    if (in_dim != 3 && in_dim != 6 && in_dim != 24) {
        throw ConfigError("geometry branch in_dim must be one of 3, 6, 24");
    }
    for (std::size_t s = 0; s < stages.size(); ++s) {
        if (stages[s].points < 1) {
            throw ConfigError("geometry stage " + std::to_string(s) +
                              " has fewer than 1 point; input too small for the stage ladder");
        }
        if (stages[s].channels < 1 || stages[s].k < 1) {
            throw ConfigError("geometry stage " + std::to_string(s) + " is malformed");
        }
        if (s > 0) {
            if (stages[s].points >= stages[s - 1].points) {
                throw ConfigError("geometry stage point counts must be strictly decreasing");
            }
            if (stages[s].k > stages[s - 1].points) {
                throw ConfigError("geometry stage k exceeds previous stage point count");
            }
        }
    }
    if (decoder_k < 1) throw ConfigError("decoder_k must be >= 1");
}

GeometryBranch::GeometryBranch(const GeometryBranchConfig& cfg, Rng& rng,
                               const std::string& name)
    : cfg_(cfg) {
    cfg_.validate();
    embed_ = MlpBlock(name + ".embed", cfg_.in_dim, cfg_.embed_dim, rng);
    int prev_channels = cfg_.embed_dim;
    for (std::size_t s = 0; s < cfg_.stages.size(); ++s) {
        const auto& sc = cfg_.stages[s];
        Stage stage;
        stage.cfg = sc;
        const std::string base = name + ".stage" + std::to_string(s);
        stage.gam = GamParams(base + ".gam", prev_channels);
        stage.lift = MlpBlock(base + ".lift", 2 * prev_channels, sc.channels, rng);
        for (int b = 0; b < sc.pre_blocks; ++b) {
            stage.pre.emplace_back(base + ".pre" + std::to_string(b), sc.channels, rng);
        }
        for (int b = 0; b < sc.pos_blocks; ++b) {
            stage.pos.emplace_back(base + ".pos" + std::to_string(b), sc.channels, rng);
        }
        stages_.push_back(std::move(stage));
        prev_channels = sc.channels;
    }
    // decoder_[i] fuses stage i+1 features onto level i (level 0 = embedding)
    for (std::size_t i = 0; i < cfg_.stages.size(); ++i) {
        const int coarse = cfg_.stages[i].channels;
        const int fine = i == 0 ? cfg_.embed_dim : cfg_.stages[i - 1].channels;
        decoder_.push_back(
            {MlpBlock(name + ".decode" + std::to_string(i), coarse + fine, fine, rng)});
    }
    out_proj_ = Linear(name + ".out", cfg_.embed_dim, cfg_.out_dim, rng);
}

Var GeometryBranch::forward(Tape& t, Var feats, const Eigen::MatrixXd& barycenters) {
    const int n = static_cast<int>(feats->value.rows());
    if (feats->value.cols() != cfg_.in_dim) {
        throw ConfigError("geometry branch expected " + std::to_string(cfg_.in_dim) +
                          "-dim features, got " + std::to_string(feats->value.cols()));
    }
    if (barycenters.rows() != n || barycenters.cols() != 3) {
        throw ConfigError("geometry branch barycenters must be N x 3");
    }
    if (cfg_.stages[0].points > n || cfg_.stages[0].k > n) {
        throw ConfigError("input cloud of " + std::to_string(n) +
                          " cells is smaller than the first geometry stage");
    }

    std::vector<Var> level_feats;       // per level, rows = level points
    std::vector<Eigen::MatrixXd> level_pts;
    level_feats.push_back(embed_(t, feats));
    level_pts.push_back(barycenters);

    for (Stage& stage : stages_) {
        const Eigen::MatrixXd& pts = level_pts.back();
        Var x = level_feats.back();
        const int m = stage.cfg.points;
        const int cur = static_cast<int>(pts.rows());

        std::vector<int> center_idx;
        if (m == cur) {
            center_idx.resize(m);
            for (int i = 0; i < m; ++i) center_idx[i] = i;
        } else {
            center_idx = farthest_point_sample(pts, m);
        }
        Eigen::MatrixXd center_pts(m, 3);
        for (int i = 0; i < m; ++i) center_pts.row(i) = pts.row(center_idx[i]);

        Var center_feats = gather_rows(t, x, center_idx);
        const Eigen::MatrixXi nbr = knn_indices(center_pts, pts, stage.cfg.k, nullptr);
        Var grouped = gather_rows(t, x, flatten_indices(nbr));
        Var gam = geometric_affine(t, grouped, center_feats, stage.cfg.k, stage.gam);
        Var enc = concat_cols(t, {gam, repeat_rows(t, center_feats, stage.cfg.k)});
        Var h = stage.lift(t, enc);
        for (RespBlock& block : stage.pre) h = block(t, h);
        Var pooled = group_max(t, h, stage.cfg.k);
        for (RespBlock& block : stage.pos) pooled = block(t, pooled);

        level_feats.push_back(pooled);
        level_pts.push_back(std::move(center_pts));
    }

    // Feature propagation back to full resolution.
    Var f = level_feats.back();
    for (int i = static_cast<int>(stages_.size()) - 1; i >= 0; --i) {
        const int k_interp =
            std::min<int>(cfg_.decoder_k, static_cast<int>(level_pts[i + 1].rows()));
        const IdwInterp interp = idw_weights(level_pts[i], level_pts[i + 1], k_interp);
        Var gathered = gather_rows(t, f, flatten_indices(interp.indices));
        Var up = group_weighted_sum(t, gathered, t.constant(interp.weights));
        f = decoder_[i].fuse(t, concat_cols(t, {up, level_feats[i]}));
    }
    return out_proj_(t, f);
}

void GeometryBranch::collect(std::vector<Parameter*>& out) {
    embed_.collect(out);
    for (Stage& s : stages_) {
        s.gam.collect(out);
        s.lift.collect(out);
        for (auto& b : s.pre) b.collect(out);
        for (auto& b : s.pos) b.collect(out);
    }
    for (auto& d : decoder_) d.fuse.collect(out);
    out_proj_.collect(out);
}

} // namespace bmseg
