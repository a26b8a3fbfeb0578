#include "bmseg/model.hpp"
#include <algorithm>

namespace bmseg {

using namespace nn;

const char* to_string(Ablation a) {
    switch (a) {
    case Ablation::Ours: return "ours";
    case Ablation::Ablation1: return "ablation1";
    case Ablation::Ablation2: return "ablation2";
    case Ablation::Ablation3: return "ablation3";
    case Ablation::Ablation4: return "ablation4";
    }
    throw ConfigError("unknown ablation");
}

Ablation ablation_from_string(const std::string& s) {
    if (s == "ours") return Ablation::Ours;
    if (s == "ablation1") return Ablation::Ablation1;
    if (s == "ablation2") return Ablation::Ablation2;
    if (s == "ablation3") return Ablation::Ablation3;
    if (s == "ablation4") return Ablation::Ablation4;
    throw ConfigError("unknown ablation '" + s + "'");
}

int ablation_in_dim(Ablation a) {
    switch (a) {
    case Ablation::Ours:
    case Ablation::Ablation2: return 6;
    case Ablation::Ablation1: return 24;
    case Ablation::Ablation3:
    case Ablation::Ablation4: return 3;
    }
    throw ConfigError("unknown ablation");
}

Eigen::MatrixXd slice_features(const CellCloud& cloud, Ablation a) {
    const int n = cloud.size();
    const int want = ablation_in_dim(a);
    switch (cloud.mode) {
    case FeatureMode::BVN24: {
        if (want == 24) return cloud.features;
        Eigen::MatrixXd out(n, want);
        out.leftCols(3) = cloud.features.middleCols(9, 3); // barycenter block
        if (want == 6) out.rightCols(3) = cloud.features.middleCols(21, 3); // its normal
        return out;
    }
    case FeatureMode::BN: {
        if (want == 24) {
            throw ConfigError("ablation1 needs the 24D representation; re-preprocess with bvn24");
        }
        return want == 6 ? cloud.features : cloud.features.leftCols(3).eval();
    }
    case FeatureMode::B: {
        if (want != 3) {
            throw ConfigError("a barycenter-only cloud cannot feed a " + std::to_string(want) +
                              "D ablation");
        }
        return cloud.features;
    }
    }
    throw ConfigError("unknown feature mode");
}

namespace {
// Small clouds cannot support the full four-level ladder; drop levels that
// would bottom out and keep k within the previous level's point count.
constexpr int kMinStagePoints = 4;
} // namespace

GeometryBranchConfig ModelConfig::geometry_config() const {
    GeometryBranchConfig g =
        GeometryBranchConfig::defaults(points, ablation_in_dim(ablation), embed_dim);
    while (g.stages.size() > 1 && g.stages.back().points < kMinStagePoints) {
        g.stages.pop_back();
    }
    int prev = points;
    for (auto& s : g.stages) {
        s.k = std::min(geometry_k, prev);
        prev = s.points;
    }
    g.out_dim = branch_out;
    return g;
}

CurveBranchConfig ModelConfig::curve_config() const {
    CurveBranchConfig c = CurveBranchConfig::defaults(points, embed_dim);
    while (c.cic_stages.size() > 1 && c.cic_stages.back().points < kMinStagePoints) {
        c.cic_stages.pop_back();
    }
    c.k = curve_k;
    c.n_curves = n_curves;
    c.curve_length = curve_length;
    c.out_dim = branch_out;
    return c;
}

HeadConfig ModelConfig::head_config() const {
    HeadConfig h;
    const bool geometry = ablation != Ablation::Ablation4;
    const bool curve = ablation == Ablation::Ours || ablation == Ablation::Ablation4;
    h.in_dim_a = branch_out;
    h.in_dim_b = (geometry && curve) ? branch_out : 0;
    h.hidden = head_hidden;
    h.dropout = head_dropout;
    return h;
}

SegModel::SegModel(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    const bool geometry = cfg.ablation != Ablation::Ablation4;
    const bool curve = cfg.ablation == Ablation::Ours || cfg.ablation == Ablation::Ablation4;
    if (geometry) {
        geometry_ = std::make_unique<GeometryBranch>(cfg.geometry_config(), rng);
    }
    if (curve) {
        curve_ = std::make_unique<CurveBranch>(cfg.curve_config(), rng);
    }
    head_ = SegHead(cfg.head_config(), rng);
}

Var SegModel::forward(Tape& t, Var feats, const Eigen::MatrixXd& barycenters, bool training,
                      Rng* dropout_rng) {
    Var a = nullptr;
    Var b = nullptr;
    if (geometry_) a = geometry_->forward(t, feats, barycenters);
    if (curve_) {
        Var c = curve_->forward(t, barycenters, training);
        if (a == nullptr) a = c;
        else b = c;
    }
    return head_.forward(t, a, b, training, dropout_rng);
}

std::vector<int> SegModel::predict(const CellCloud& cloud) {
    Tape t;
    Var feats = t.constant(slice_features(cloud, cfg_.ablation));
    Var logits = forward(t, feats, cloud.barycenters, false, nullptr);
    std::vector<int> pred(cloud.size());
    for (int i = 0; i < cloud.size(); ++i) {
        int best = 0;
        for (int c = 1; c < static_cast<int>(logits->value.cols()); ++c) {
            if (logits->value(i, c) > logits->value(i, best)) best = c;
        }
        pred[i] = best;
    }
    return pred;
}

std::vector<Parameter*> SegModel::parameters() {
    std::vector<Parameter*> out;
    if (geometry_) geometry_->collect(out);
    if (curve_) curve_->collect(out);
    head_.collect(out);
    return out;
}

SegModel build_model(Ablation ablation, const ModelConfig& base, Rng& rng) {
    ModelConfig cfg = base;
    cfg.ablation = ablation;
    return SegModel(cfg, rng);
}

} // namespace bmseg
