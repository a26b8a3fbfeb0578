#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bmseg/nn/tape.hpp"

namespace bmseg::nn {

// Shared per-point linear layer (a 1D convolution with kernel 1).
struct Linear {
    Parameter weight; // in x out
    Parameter bias;   // 1 x out

    Linear() = default;
    Linear(const std::string& name, int in, int out, Rng& rng);

    Var operator()(Tape& t, Var x) {
        return linear(t, x, t.param(weight), t.param(bias));
    }
    int in_dim() const { return static_cast<int>(weight.value.rows()); }
    int out_dim() const { return static_cast<int>(weight.value.cols()); }
    void collect(std::vector<Parameter*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }
};

// Per-channel standardization over the point dimension with learnable affine.
struct FeatureNorm {
    Parameter gain; // 1 x C, init 1
    Parameter bias; // 1 x C, init 0
    double eps = 1e-5;

    FeatureNorm() = default;
    FeatureNorm(const std::string& name, int channels);

    Var operator()(Tape& t, Var x) {
        return feature_norm(t, x, t.param(gain), t.param(bias), eps);
    }
    void collect(std::vector<Parameter*>& out) {
        out.push_back(&gain);
        out.push_back(&bias);
    }
};

// linear -> feature_norm -> relu
struct MlpBlock {
    Linear lin;
    FeatureNorm norm;

    MlpBlock() = default;
    MlpBlock(const std::string& name, int in, int out, Rng& rng)
        : lin(name + ".lin", in, out, rng), norm(name + ".norm", out) {}

    Var operator()(Tape& t, Var x) { return relu(t, norm(t, lin(t, x))); }
    void collect(std::vector<Parameter*>& out) {
        lin.collect(out);
        norm.collect(out);
    }
};

// x + lin2(relu(norm(lin1(x)))), shape preserving. Zeroing lin2 makes the
// block an exact identity.
struct RespBlock {
    Linear lin1;
    FeatureNorm norm;
    Linear lin2;

    RespBlock() = default;
    RespBlock(const std::string& name, int channels, Rng& rng)
        : lin1(name + ".lin1", channels, channels, rng),
          norm(name + ".norm", channels),
          lin2(name + ".lin2", channels, channels, rng) {}

    Var operator()(Tape& t, Var x) {
        return add(t, x, lin2(t, relu(t, norm(t, lin1(t, x)))));
    }
    void collect(std::vector<Parameter*>& out) {
        lin1.collect(out);
        norm.collect(out);
        lin2.collect(out);
    }
};

// Learnable per-channel scale/shift applied to affine-normalized grouped
// differences.
struct GamParams {
    Parameter alpha; // 1 x C, init 1
    Parameter beta;  // 1 x C, init 0
    double epsilon = 1e-5;

    GamParams() = default;
    GamParams(const std::string& name, int channels);

    void collect(std::vector<Parameter*>& out) {
        out.push_back(&alpha);
        out.push_back(&beta);
    }
};

// d = neighbors - center (broadcast over each group), normalized by the
// scalar std over all entries of d, then alpha * . + beta per channel.
Var geometric_affine(Tape& t, Var neighbors, Var centers, int k, GamParams& params);

} // namespace bmseg::nn
