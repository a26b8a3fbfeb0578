#include <doctest.h>

#include <numeric>

#include "bmseg/geometry_branch.hpp"
#include "support/oracles.hpp"

using namespace bmseg;
using namespace bmseg::nn;

namespace {

Eigen::MatrixXd random_points(int n, std::uint64_t seed, double span = 1.0) {
    Rng rng(seed);
    Eigen::MatrixXd pts(n, 3);
    for (int i = 0; i < n; ++i) {
        pts.row(i) << rng.uniform(-span, span), rng.uniform(-span, span),
            rng.uniform(-span, span);
    }
    return pts;
}

// Tiny ladder so finite differences stay affordable.
GeometryBranchConfig tiny_config(int n, int in_dim) {
    GeometryBranchConfig cfg;
    cfg.in_dim = in_dim;
    cfg.embed_dim = 8;
    cfg.stages = {{n, 4, 1, 1, 8}, {n / 2, 4, 1, 1, 16}};
    cfg.decoder_k = 3;
    cfg.out_dim = 12;
    return cfg;
}

} // namespace

TEST_CASE("geometry forward emits (N, out_dim) at N=1024") {
    Rng rng(1);
    GeometryBranchConfig cfg = GeometryBranchConfig::defaults(1024, 6, 16);
    cfg.out_dim = 32;
    GeometryBranch branch(cfg, rng);
    const Eigen::MatrixXd bary = random_points(1024, 2);
    Eigen::MatrixXd feats(1024, 6);
    feats.leftCols(3) = bary;
    feats.rightCols(3) = random_points(1024, 3);
    Tape t;
    Var out = branch.forward(t, t.constant(feats), bary);
    CHECK(out->value.rows() == 1024);
    CHECK(out->value.cols() == 32);
    CHECK(out->value.allFinite());
}

TEST_CASE("duplicate-point cloud stays finite") {
    Rng rng(4);
    GeometryBranchConfig cfg = tiny_config(16, 3);
    GeometryBranch branch(cfg, rng);
    Eigen::MatrixXd bary(16, 3);
    for (int i = 0; i < 16; ++i) bary.row(i) = Eigen::RowVector3d(0.5, -0.25, 0.125);
    Tape t;
    Var out = branch.forward(t, t.constant(bary), bary);
    CHECK(out->value.allFinite());
}

TEST_CASE("permuting input rows permutes the output rows identically") {
    Rng rng(5);
    GeometryBranchConfig cfg = tiny_config(32, 6);
    GeometryBranch branch(cfg, rng);
    const Eigen::MatrixXd bary = random_points(32, 6);
    Eigen::MatrixXd feats(32, 6);
    feats.leftCols(3) = bary;
    feats.rightCols(3) = random_points(32, 7);

    Eigen::MatrixXd out_base;
    {
        Tape t;
        out_base = branch.forward(t, t.constant(feats), bary)->value;
    }

    std::vector<int> perm(32);
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle(8);
    for (int i = 31; i > 0; --i) std::swap(perm[i], perm[shuffle.uniform_int(0, i)]);
    Eigen::MatrixXd bary_p(32, 3), feats_p(32, 6);
    for (int i = 0; i < 32; ++i) {
        bary_p.row(i) = bary.row(perm[i]);
        feats_p.row(i) = feats.row(perm[i]);
    }
    Eigen::MatrixXd out_perm;
    {
        Tape t;
        out_perm = branch.forward(t, t.constant(feats_p), bary_p)->value;
    }
    for (int i = 0; i < 32; ++i) {
        CHECK((out_perm.row(i) - out_base.row(perm[i])).cwiseAbs().maxCoeff() < 1e-4);
    }
}

TEST_CASE("forward is deterministic on identical content") {
    Rng rng(9);
    GeometryBranchConfig cfg = tiny_config(24, 3);
    GeometryBranch branch(cfg, rng);
    const Eigen::MatrixXd bary = random_points(24, 10);
    Eigen::MatrixXd a, b;
    {
        Tape t;
        a = branch.forward(t, t.constant(bary), bary)->value;
    }
    {
        Tape t;
        b = branch.forward(t, t.constant(bary), bary)->value;
    }
    CHECK(a == b);
}

TEST_CASE("input smaller than the deepest stage is a config error") {
    Rng rng(11);
    GeometryBranchConfig cfg;
    cfg.in_dim = 3;
    cfg.embed_dim = 8;
    cfg.stages = {{64, 4, 1, 1, 8}, {16, 4, 1, 1, 16}};
    cfg.out_dim = 8;
    GeometryBranch branch(cfg, rng);
    const Eigen::MatrixXd bary = random_points(32, 12);
    Tape t;
    CHECK_THROWS_AS(branch.forward(t, t.constant(bary), bary), ConfigError);

    GeometryBranchConfig bad = cfg;
    bad.stages[1].points = 0; // N/64 ladder bottomed out
    CHECK_THROWS_AS(GeometryBranch(bad, rng), ConfigError);
}

TEST_CASE("feature dim mismatch is rejected") {
    Rng rng(13);
    GeometryBranch branch(tiny_config(16, 6), rng);
    const Eigen::MatrixXd bary = random_points(16, 14);
    Tape t;
    CHECK_THROWS_AS(branch.forward(t, t.constant(bary), bary), ConfigError);
}

TEST_CASE("finite differences through the full geometry branch at toy size") {
    Rng rng(15);
    GeometryBranchConfig cfg = tiny_config(12, 3);
    cfg.stages = {{12, 3, 1, 1, 6}, {6, 3, 1, 1, 8}};
    cfg.embed_dim = 6;
    cfg.out_dim = 5;
    GeometryBranch branch(cfg, rng);
    const Eigen::MatrixXd bary = random_points(12, 16);
    Parameter feats("feats", bary);
    Rng wrng(17);
    Mat wa(12, 5);
    for (int i = 0; i < 12; ++i) {
        for (int j = 0; j < 5; ++j) wa(i, j) = wrng.uniform(-1, 1);
    }
    std::vector<Parameter*> params = {&feats};
    branch.collect(params);
    auto build = [&](Tape& t) {
        Var out = branch.forward(t, t.param(feats), bary);
        return sum_all(t, hadamard(t, out, t.constant(wa)));
    };
    // a handful of coordinates per parameter keeps this fast
    const auto rep = oracle::check_gradients(build, params, 1e-5, 6);
    CHECK(rep.max_rel_err < 1e-4);
}
