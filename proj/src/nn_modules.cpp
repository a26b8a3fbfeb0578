#include "bmseg/nn/modules.hpp"

#include <cmath>

namespace bmseg::nn {

Linear::Linear(const std::string& name, int in, int out, Rng& rng) {
    // U(+-1/sqrt(in)) weights, zero bias.
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Mat w(in, out);
    for (int i = 0; i < in; ++i) {
        for (int j = 0; j < out; ++j) w(i, j) = rng.uniform(-bound, bound);
    }
    weight = Parameter(name + ".weight", std::move(w));
    bias = Parameter(name + ".bias", Mat::Zero(1, out));
}

FeatureNorm::FeatureNorm(const std::string& name, int channels) {
    gain = Parameter(name + ".gain", Mat::Ones(1, channels));
    bias = Parameter(name + ".bias", Mat::Zero(1, channels));
}

GamParams::GamParams(const std::string& name, int channels) {
    alpha = Parameter(name + ".alpha", Mat::Ones(1, channels));
    beta = Parameter(name + ".beta", Mat::Zero(1, channels));
}

Var geometric_affine(Tape& t, Var neighbors, Var centers, int k, GamParams& params) {
    Var diff = sub_group_center(t, neighbors, centers, k);
    Var normalized = global_std_normalize(t, diff, params.epsilon);
    return col_affine(t, normalized, t.param(params.alpha), t.param(params.beta));
}

} // namespace bmseg::nn
