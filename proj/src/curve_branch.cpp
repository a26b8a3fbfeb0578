#include "bmseg/curve_branch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bmseg {

using namespace nn;

namespace {
constexpr double kMaskLogit = -1e30;

std::vector<int> iota_indices(int n) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}
} // namespace

CurveBranchConfig CurveBranchConfig::defaults(int n_points, int base_channels) {
    CurveBranchConfig cfg;
    const int divisors[4] = {1, 4, 16, 64};
    for (int s = 0; s < 4; ++s) {
        cfg.cic_stages.push_back({n_points / divisors[s], base_channels << s});
    }
    return cfg;
}

void CurveBranchConfig::validate() const {
    if (cic_stages.empty()) throw ConfigError("curve branch needs at least one stage");
    if (curve_length < 2) throw ConfigError("curve_length must be >= 2");
    if (n_curves < 1) throw ConfigError("n_curves must be >= 1");
    if (k < 1) throw ConfigError("curve branch k must be >= 1");
    for (std::size_t s = 0; s < cic_stages.size(); ++s) {
        if (cic_stages[s].points < 1 || cic_stages[s].channels < 1) {
            throw ConfigError("curve stage " + std::to_string(s) + " is malformed");
        }
        if (s > 0 && cic_stages[s].points >= cic_stages[s - 1].points) {
            throw ConfigError("curve stage point counts must be strictly decreasing");
        }
    }
}

// ---------------------------------------------------------------------------
// LPFA

Lpfa::Lpfa(const std::string& name, int in_channels, int out_channels, int k_, Rng& rng) {
    k = k_;
    positions_only = in_channels == 0;
    const int enc_in = positions_only ? 3 : 2 * in_channels + 3;
    enc = MlpBlock(name + ".enc", enc_in, out_channels, rng);
}

Var Lpfa::forward(Tape& t, const Eigen::MatrixXd& ref_pts, Var feats,
                  const std::vector<int>& query_idx) {
    const int m_ref = static_cast<int>(ref_pts.rows());
    const int q = static_cast<int>(query_idx.size());
    const int k_eff = std::min(k, m_ref);
    if (k_eff < 1) throw ConfigError("lpfa needs at least one neighbor");

    Eigen::MatrixXd query_pts(q, 3);
    for (int i = 0; i < q; ++i) query_pts.row(i) = ref_pts.row(query_idx[i]);
    const Eigen::MatrixXi nbr = knn_indices(query_pts, ref_pts, k_eff, nullptr);

    Eigen::MatrixXd rel(q * k_eff, 3);
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j < k_eff; ++j) {
            rel.row(i * k_eff + j) = ref_pts.row(nbr(i, j)) - query_pts.row(i);
        }
    }
    Var rel_var = t.constant(std::move(rel));

    Var encoded = nullptr;
    if (positions_only) {
        encoded = enc(t, rel_var);
    } else {
        if (feats == nullptr) throw ConfigError("lpfa needs features unless positions_only");
        Var nf = gather_rows(t, feats, flatten_indices(nbr));
        Var qf = gather_rows(t, feats, query_idx);
        Var diff = sub_group_center(t, nf, qf, k_eff);
        encoded = enc(t, concat_cols(t, {nf, diff, rel_var}));
    }
    return group_max(t, encoded, k_eff);
}

// ---------------------------------------------------------------------------
// Curve walking

CurveWalker::CurveWalker(const std::string& name, int channels, int n_curves_, int curve_length_,
                         int k_, Rng& rng) {
    n_curves = n_curves_;
    curve_length = curve_length_;
    k = k_;
    const int hidden = std::max(channels / 4, 8);
    score_hidden = MlpBlock(name + ".score_hidden", channels, hidden, rng);
    score_out = Linear(name + ".score_out", hidden, 1, rng);
    compat_hidden = MlpBlock(name + ".compat_hidden", 2 * channels, hidden, rng);
    compat_out = Linear(name + ".compat_out", hidden, 1, rng);
}

CurveWalker::Result CurveWalker::walk(Tape& t, Var feats, const Eigen::MatrixXd& pts,
                                      bool training) {
    const int m = static_cast<int>(feats->value.rows());
    if (m < 2) throw ConfigError("curve walk needs at least two points");
    const int n_eff = std::min(n_curves, m);
    const int k_eff = std::min(k, m - 1);

    // Start points: top-n cells by learned score, gradient kept alive by
    // gating the start features with the score's sigmoid.
    Var scores = score_out(t, score_hidden(t, feats)); // m x 1
    std::vector<int> order = iota_indices(m);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores->value(a, 0) > scores->value(b, 0);
    });
    std::vector<int> starts(order.begin(), order.begin() + n_eff);

    const std::vector<int> self_idx = iota_indices(m);
    const Eigen::MatrixXi nbr = knn_indices(pts, pts, k_eff, &self_idx);

    Result result;
    result.curves.indices.resize(n_eff, curve_length);
    for (int i = 0; i < n_eff; ++i) result.curves.indices(i, 0) = starts[i];

    Var gate = sigmoid(t, gather_rows(t, scores, starts));
    Var state = row_scale(t, gather_rows(t, feats, starts), gate);
    Var visited_sum = state;
    Var visited_max = state;

    std::vector<int> cur = starts;
    std::vector<int> prev(n_eff, -1);
    for (int step = 1; step < curve_length; ++step) {
        std::vector<int> flat(static_cast<std::size_t>(n_eff) * k_eff);
        for (int i = 0; i < n_eff; ++i) {
            for (int j = 0; j < k_eff; ++j) flat[i * k_eff + j] = nbr(cur[i], j);
        }
        Var nf = gather_rows(t, feats, flat);
        Var st = repeat_rows(t, state, k_eff);
        Var compat = compat_out(t, compat_hidden(t, concat_cols(t, {nf, st})));
        Var logits = rows_to_groups(t, compat, k_eff);

        // Mask the position we just came from unless it is the only option.
        Mat mask = Mat::Zero(n_eff, k_eff);
        for (int i = 0; i < n_eff; ++i) {
            if (prev[i] < 0) continue;
            bool all_prev = true;
            for (int j = 0; j < k_eff; ++j) {
                if (flat[i * k_eff + j] != prev[i]) all_prev = false;
            }
            if (all_prev) continue;
            for (int j = 0; j < k_eff; ++j) {
                if (flat[i * k_eff + j] == prev[i]) mask(i, j) = kMaskLogit;
            }
        }
        Var weights = row_softmax(t, add_const(t, logits, mask));

        std::vector<int> next(n_eff);
        for (int i = 0; i < n_eff; ++i) {
            int best = 0;
            for (int j = 1; j < k_eff; ++j) {
                if (weights->value(i, j) > weights->value(i, best)) best = j;
            }
            next[i] = flat[i * k_eff + best];
            result.curves.indices(i, step) = next[i];
        }

        Var selected = training ? group_weighted_sum(t, nf, weights)
                                : gather_rows(t, feats, next);
        visited_sum = add(t, visited_sum, selected);
        visited_max = emax(t, visited_max, selected);
        state = scale(t, visited_sum, 1.0 / static_cast<double>(step + 1));
        prev = cur;
        cur = next;
    }

    result.step_mean = scale(t, visited_sum, 1.0 / static_cast<double>(curve_length));
    result.step_max = visited_max;
    return result;
}

// ---------------------------------------------------------------------------
// Aggregation

CurveAggregator::CurveAggregator(const std::string& name, int channels, Rng& rng) {
    desc = MlpBlock(name + ".desc", 2 * channels, channels, rng);
    proj_q = Linear(name + ".proj_q", channels, channels, rng);
    proj_k = Linear(name + ".proj_k", channels, channels, rng);
    proj_v = Linear(name + ".proj_v", channels, channels, rng);
    fuse = Linear(name + ".fuse", 2 * channels, channels, rng);
}

Var CurveAggregator::aggregate(Tape& t, Var feats, Var step_mean, Var step_max,
                               Eigen::MatrixXd* descriptors_out) {
    Var descriptors = desc(t, concat_cols(t, {step_mean, step_max}));
    if (descriptors_out) *descriptors_out = descriptors->value;
    const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(feats->value.cols()));
    Var logits =
        scale(t, matmul(t, proj_q(t, feats), transpose(t, proj_k(t, descriptors))), inv_sqrt_c);
    Var attn = row_softmax(t, logits);
    Var attended = matmul(t, attn, proj_v(t, descriptors));
    return add(t, feats, fuse(t, concat_cols(t, {feats, attended})));
}

// ---------------------------------------------------------------------------
// CIC block

CicBlock::CicBlock(const std::string& name, int in_channels, const CurveStageConfig& cfg_,
                   int k, int n_curves, int curve_length, Rng& rng) {
    cfg = cfg_;
    lpfa = Lpfa(name + ".lpfa", in_channels, cfg.channels, k, rng);
    walker = CurveWalker(name + ".walk", cfg.channels, n_curves, curve_length, k, rng);
    agg = CurveAggregator(name + ".agg", cfg.channels, rng);
}

CicBlock::Result CicBlock::forward(Tape& t, Var feats, const Eigen::MatrixXd& pts,
                                   bool training) {
    const int m_in = static_cast<int>(pts.rows());
    const int m_out = cfg.points == 0 ? m_in : cfg.points;
    if (m_out > m_in) {
        throw ConfigError("cic stage wants " + std::to_string(m_out) + " of " +
                          std::to_string(m_in) + " points");
    }

    std::vector<int> center_idx;
    if (m_out == m_in) {
        center_idx = iota_indices(m_in); // no downsampling
    } else {
        center_idx = farthest_point_sample(pts, m_out);
    }

    Result result;
    result.pts.resize(m_out, 3);
    for (int i = 0; i < m_out; ++i) result.pts.row(i) = pts.row(center_idx[i]);

    Var h = lpfa.forward(t, pts, feats, center_idx);
    CurveWalker::Result walked = walker.walk(t, h, result.pts, training);
    result.curves = walked.curves;
    result.feats = agg.aggregate(t, h, walked.step_mean, walked.step_max,
                                 &result.curves.descriptors);
    return result;
}

// ---------------------------------------------------------------------------
// Branch

CurveBranch::CurveBranch(const CurveBranchConfig& cfg, Rng& rng, const std::string& name)
    : cfg_(cfg) {
    cfg_.validate();
    const int c0 = cfg_.cic_stages[0].channels;
    embed_ = Lpfa(name + ".embed", 0, c0, cfg_.k, rng);
    int prev = c0;
    for (std::size_t s = 0; s < cfg_.cic_stages.size(); ++s) {
        encoder_.emplace_back(name + ".cic" + std::to_string(s), prev, cfg_.cic_stages[s],
                              cfg_.k, cfg_.n_curves, cfg_.curve_length, rng);
        prev = cfg_.cic_stages[s].channels;
    }
    for (std::size_t i = 0; i < cfg_.cic_stages.size(); ++i) {
        const int coarse = cfg_.cic_stages[i].channels;
        const int fine = i == 0 ? c0 : cfg_.cic_stages[i - 1].channels;
        DecoderLevel level;
        level.fuse = MlpBlock(name + ".decode" + std::to_string(i), coarse + fine, fine, rng);
        CurveStageConfig up_cfg{0, fine}; // 0 = keep the restored resolution
        level.up_cic = CicBlock(name + ".upcic" + std::to_string(i), fine, up_cfg, cfg_.k,
                                cfg_.n_curves, cfg_.curve_length, rng);
        decoder_.push_back(std::move(level));
    }
    out_proj_ = Linear(name + ".out", c0, cfg_.out_dim, rng);
}

Var CurveBranch::forward(Tape& t, const Eigen::MatrixXd& barycenters, bool training,
                         std::vector<CurveSet>* curves_out) {
    const int n = static_cast<int>(barycenters.rows());
    if (barycenters.cols() != 3) {
        throw ConfigError("curve branch consumes barycenter coordinates only (N x 3)");
    }
    if (cfg_.cic_stages[0].points > n) {
        throw ConfigError("input cloud of " + std::to_string(n) +
                          " cells is smaller than the first curve stage");
    }

    std::vector<Var> level_feats;
    std::vector<Eigen::MatrixXd> level_pts;
    level_feats.push_back(embed_.forward(t, barycenters, nullptr, iota_indices(n)));
    level_pts.push_back(barycenters);

    for (CicBlock& block : encoder_) {
        CicBlock::Result res = block.forward(t, level_feats.back(), level_pts.back(), training);
        if (curves_out) curves_out->push_back(res.curves);
        level_feats.push_back(res.feats);
        level_pts.push_back(std::move(res.pts));
    }

    Var f = level_feats.back();
    for (int i = static_cast<int>(encoder_.size()) - 1; i >= 0; --i) {
        const int k_interp = std::min<int>(decoder_k_, static_cast<int>(level_pts[i + 1].rows()));
        const IdwInterp interp = idw_weights(level_pts[i], level_pts[i + 1], k_interp);
        Var gathered = gather_rows(t, f, flatten_indices(interp.indices));
        Var up = group_weighted_sum(t, gathered, t.constant(interp.weights));
        f = decoder_[i].fuse(t, concat_cols(t, {up, level_feats[i]}));
        CicBlock::Result res = decoder_[i].up_cic.forward(t, f, level_pts[i], training);
        if (curves_out) curves_out->push_back(res.curves);
        f = res.feats;
    }
    return out_proj_(t, f);
}

void CurveBranch::collect(std::vector<Parameter*>& out) {
    auto collect_lpfa = [&](Lpfa& l) { l.enc.collect(out); };
    auto collect_walker = [&](CurveWalker& w) {
        w.score_hidden.collect(out);
        w.score_out.collect(out);
        w.compat_hidden.collect(out);
        w.compat_out.collect(out);
    };
    auto collect_agg = [&](CurveAggregator& a) {
        a.desc.collect(out);
        a.proj_q.collect(out);
        a.proj_k.collect(out);
        a.proj_v.collect(out);
        a.fuse.collect(out);
    };
    auto collect_cic = [&](CicBlock& c) {
        collect_lpfa(c.lpfa);
        collect_walker(c.walker);
        collect_agg(c.agg);
    };
    collect_lpfa(embed_);
    for (CicBlock& c : encoder_) collect_cic(c);
    for (DecoderLevel& level : decoder_) {
        level.fuse.collect(out);
        collect_cic(level.up_cic);
    }
    out_proj_.collect(out);
}

} // namespace bmseg
