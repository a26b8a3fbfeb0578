#include "bmseg/seg_head.hpp"

namespace bmseg {

using namespace nn;

void HeadConfig::validate() const {
    if (in_dim_a < 1) throw ConfigError("head in_dim_a must be positive");
    if (in_dim_b < 0) throw ConfigError("head in_dim_b must be non-negative");
    if (hidden < 1) throw ConfigError("head hidden width must be positive");
    if (classes != 8) throw ConfigError("this task segments exactly 8 semantic parts");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("head dropout must be in [0, 1)");
}

SegHead::SegHead(const HeadConfig& cfg, Rng& rng, const std::string& name) : cfg_(cfg) {
    cfg_.validate();
    conv1_ = Linear(name + ".conv1", cfg_.in_dim_a + cfg_.in_dim_b, cfg_.hidden, rng);
    conv2_ = Linear(name + ".conv2", cfg_.hidden, cfg_.classes, rng);
}

Var SegHead::forward(Tape& t, Var feats_a, Var feats_b, bool training, Rng* dropout_rng) {
    if (feats_a->value.cols() != cfg_.in_dim_a) {
        throw ConfigError("head branch-a width mismatch");
    }
    Var x = feats_a;
    if (cfg_.in_dim_b > 0) {
        if (feats_b == nullptr) throw ConfigError("head expects two branch inputs");
        if (feats_b->value.cols() != cfg_.in_dim_b) {
            throw ConfigError("head branch-b width mismatch");
        }
        if (feats_b->value.rows() != feats_a->value.rows()) {
            throw ConfigError("head branch row counts differ: " +
                              std::to_string(feats_a->value.rows()) + " vs " +
                              std::to_string(feats_b->value.rows()));
        }
        x = concat_cols(t, {feats_a, feats_b});
    }
    Var h = relu(t, conv1_(t, x));
    if (training && cfg_.dropout > 0.0) {
        if (!dropout_rng) throw ConfigError("training head forward needs a dropout rng");
        h = dropout(t, h, cfg_.dropout, *dropout_rng, true);
    }
    return conv2_(t, h);
}

void SegHead::collect(std::vector<Parameter*>& out) {
    conv1_.collect(out);
    conv2_.collect(out);
}

} // namespace bmseg
