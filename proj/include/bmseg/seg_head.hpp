#pragma once

#include <string>
#include <vector>

#include "bmseg/nn/modules.hpp"

namespace bmseg {

struct HeadConfig {
    int in_dim_a = 256;
    int in_dim_b = 256; // 0 for single-branch ablations
    int hidden = 256;
    int classes = 8;
    double dropout = 0.5;

    void validate() const;
};

// Concatenated branch features through two per-cell 1D convolutions (kernel
// 1): conv + relu + dropout + conv. Emits raw logits; the loss applies the
// softmax.
class SegHead {
public:
    SegHead() = default;
    SegHead(const HeadConfig& cfg, Rng& rng, const std::string& name = "head");

    // feats_b may be null when in_dim_b == 0. dropout_rng may be null when
    // training == false (or dropout == 0).
    nn::Var forward(nn::Tape& t, nn::Var feats_a, nn::Var feats_b, bool training,
                    Rng* dropout_rng);

    void collect(std::vector<nn::Parameter*>& out);
    const HeadConfig& config() const { return cfg_; }

private:
    HeadConfig cfg_;
    nn::Linear conv1_, conv2_;
};

} // namespace bmseg
