#include <doctest.h>

#include "bmseg/nn/modules.hpp"
#include "bmseg/nn/tape.hpp"
#include "support/oracles.hpp"

using namespace bmseg;
using namespace bmseg::nn;

namespace {

Mat random_mat(int r, int c, Rng& rng, double span = 1.0) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-span, span);
    }
    return m;
}

// Weighted sum against a fixed random matrix turns any output into a scalar
// whose gradient exercises every output coordinate.
Var weighted_scalar(Tape& t, Var x, const Mat& w) {
    return sum_all(t, hadamard(t, x, t.constant(w)));
}

} // namespace

TEST_CASE("creation order backward pass accumulates into parameters") {
    Rng rng(1);
    Parameter a("a", random_mat(2, 3, rng));
    Parameter b("b", random_mat(2, 3, rng));
    Tape t;
    Var sum = add(t, t.param(a), t.param(b));
    Var loss = sum_all(t, sum);
    t.backward(loss);
    CHECK((a.grad - Mat::Ones(2, 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b.grad - Mat::Ones(2, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradients accumulate across backward passes until zero_grad") {
    Rng rng(2);
    Parameter a("a", random_mat(2, 2, rng));
    for (int pass = 0; pass < 2; ++pass) {
        Tape t;
        t.backward(sum_all(t, t.param(a)));
    }
    CHECK(a.grad(0, 0) == 2.0);
    a.zero_grad();
    CHECK(a.grad(0, 0) == 0.0);
}

TEST_CASE("finite differences: dense and elementwise ops") {
    Rng rng(3);
    Parameter x("x", random_mat(4, 5, rng));
    Parameter w("w", random_mat(5, 3, rng));
    Parameter b("b", random_mat(1, 3, rng));
    const Mat wa = random_mat(4, 3, rng);

    auto build = [&](Tape& t) {
        Var h = linear(t, t.param(x), t.param(w), t.param(b));
        h = relu(t, h);
        h = sigmoid(t, h);
        return weighted_scalar(t, h, wa);
    };
    const auto rep = oracle::check_gradients(build, {&x, &w, &b});
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("finite differences: matmul, transpose, scale, sub, hadamard") {
    Rng rng(4);
    Parameter a("a", random_mat(3, 4, rng));
    Parameter b("b", random_mat(4, 2, rng));
    Parameter c("c", random_mat(2, 3, rng));
    const Mat wa = random_mat(3, 3, rng);
    auto build = [&](Tape& t) {
        Var prod = matmul(t, t.param(a), t.param(b)); // 3x2
        Var back = matmul(t, prod, t.param(c));       // 3x3
        Var mixed = hadamard(t, back, transpose(t, back));
        Var diff = sub(t, mixed, scale(t, back, 0.25));
        return weighted_scalar(t, diff, wa);
    };
    const auto rep = oracle::check_gradients(build, {&a, &b, &c});
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("finite differences: concat, slice, gather") {
    Rng rng(5);
    Parameter a("a", random_mat(6, 3, rng));
    Parameter b("b", random_mat(6, 2, rng));
    const std::vector<int> idx = {0, 5, 5, 2, 1};
    const Mat wa = random_mat(5, 4, rng);
    auto build = [&](Tape& t) {
        Var cat = concat_cols(t, {t.param(a), t.param(b)});
        Var sliced = slice_cols(t, cat, 1, 4);
        Var rows = gather_rows(t, sliced, idx);
        return weighted_scalar(t, rows, wa);
    };
    const auto rep = oracle::check_gradients(build, {&a, &b});
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("finite differences: grouped ops") {
    Rng rng(6);
    const int m = 4, k = 3, c = 5;
    Parameter nbr("nbr", random_mat(m * k, c, rng));
    Parameter ctr("ctr", random_mat(m, c, rng));
    Parameter wts("wts", random_mat(m, k, rng));
    const Mat wa = random_mat(m, c, rng);
    const Mat wb = random_mat(m, c, rng);
    const Mat wc = random_mat(m, c, rng);
    auto build = [&](Tape& t) {
        Var diff = sub_group_center(t, t.param(nbr), t.param(ctr), k);
        Var rep_c = repeat_rows(t, t.param(ctr), k);
        Var mixed = hadamard(t, diff, rep_c);
        Var mx = group_max(t, mixed, k);
        Var mn = group_mean(t, mixed, k);
        Var ws = group_weighted_sum(t, mixed, t.param(wts));
        Var s1 = weighted_scalar(t, mx, wa);
        Var s2 = weighted_scalar(t, mn, wb);
        Var s3 = weighted_scalar(t, ws, wc);
        return add(t, s1, add(t, s2, s3));
    };
    const auto rep = oracle::check_gradients(build, {&nbr, &ctr, &wts});
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("finite differences: softmax, rows_to_groups, row_scale, emax") {
    Rng rng(7);
    const int m = 5, k = 4;
    Parameter a("a", random_mat(m * k, 1, rng));
    Parameter s("s", random_mat(m, 1, rng));
    Parameter b("b", random_mat(m, k, rng));
    const Mat wa = random_mat(m, k, rng);
    auto build = [&](Tape& t) {
        Var grouped = rows_to_groups(t, t.param(a), k);
        Var soft = row_softmax(t, grouped);
        Var scaled = row_scale(t, soft, sigmoid(t, t.param(s)));
        Var mx = emax(t, scaled, t.param(b));
        return weighted_scalar(t, mx, wa);
    };
    const auto rep = oracle::check_gradients(build, {&a, &s, &b});
    CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("finite differences: global std normalize and feature norm") {
    Rng rng(8);
    Parameter x("x", random_mat(7, 4, rng));
    Parameter gain("gain", random_mat(1, 4, rng));
    Parameter bias("bias", random_mat(1, 4, rng));
    const Mat wa = random_mat(7, 4, rng);
    auto build = [&](Tape& t) {
        Var g = global_std_normalize(t, t.param(x), 1e-5);
        Var f = feature_norm(t, g, t.param(gain), t.param(bias));
        return weighted_scalar(t, f, wa);
    };
    const auto rep = oracle::check_gradients(build, {&x, &gain, &bias});
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("finite differences: cross entropy with and without class weights") {
    Rng rng(9);
    Parameter logits("logits", random_mat(6, 8, rng));
    const std::vector<int> labels = {0, 3, 7, 3, 1, 5};
    auto build_plain = [&](Tape& t) {
        return cross_entropy_with_logits(t, t.param(logits), labels);
    };
    CHECK(oracle::check_gradients(build_plain, {&logits}).max_rel_err < 1e-6);

    const std::vector<double> weights = {1.0, 2.0, 1.0, 0.5, 1.0, 3.0, 1.0, 1.0};
    auto build_weighted = [&](Tape& t) {
        return cross_entropy_with_logits(t, t.param(logits), labels, &weights);
    };
    CHECK(oracle::check_gradients(build_weighted, {&logits}).max_rel_err < 1e-6);
}

TEST_CASE("cross entropy value matches a direct log-softmax computation") {
    Mat logits(2, 8);
    logits.setZero();
    logits(0, 2) = 1.0;
    Tape t;
    Var loss = cross_entropy_with_logits(t, t.constant(logits), {2, 0});
    // row 0: -log(e / (e + 7)) ; row 1: -log(1/8)
    const double row0 = -std::log(std::exp(1.0) / (std::exp(1.0) + 7.0));
    const double row1 = std::log(8.0);
    CHECK(loss->value(0, 0) == doctest::Approx(0.5 * (row0 + row1)).epsilon(1e-12));
}

TEST_CASE("dropout: eval is identity, train masks with inverse scaling") {
    Rng rng(10);
    Mat x = Mat::Ones(50, 40);
    Tape t;
    Var xv = t.constant(x);
    CHECK(nn::dropout(t, xv, 0.5, rng, false) == xv);
    Var dropped = nn::dropout(t, xv, 0.5, rng, true);
    int zeros = 0, doubled = 0;
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 40; ++j) {
            if (dropped->value(i, j) == 0.0) ++zeros;
            else if (dropped->value(i, j) == doctest::Approx(2.0)) ++doubled;
        }
    }
    CHECK(zeros + doubled == 2000);
    CHECK(zeros > 700);
    CHECK(zeros < 1300);
}

TEST_CASE("ties in group_max route the gradient to the first maximum") {
    Mat x(4, 1);
    x << 2.0, 2.0, 1.0, 2.0;
    Parameter p("p", x);
    Tape t;
    Var mx = group_max(t, t.param(p), 4);
    t.backward(sum_all(t, mx));
    CHECK(p.grad(0, 0) == 1.0);
    CHECK(p.grad(1, 0) == 0.0);
    CHECK(p.grad(3, 0) == 0.0);
}

TEST_CASE("geometric_affine: zero difference gives zero output, collapse gives beta") {
    Rng rng(11);
    const int m = 3, k = 4, c = 5;
    GamParams gam("gam", c);
    const Mat center = random_mat(m, c, rng);
    Mat nbrs(m * k, c);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < k; ++j) nbrs.row(i * k + j) = center.row(i);
    }
    {
        Tape t;
        Var out = geometric_affine(t, t.constant(nbrs), t.constant(center), k, gam);
        CHECK(out->value.cwiseAbs().maxCoeff() == 0.0);
    }
    gam.alpha.value.setZero();
    gam.beta.value.setConstant(0.75);
    {
        Tape t;
        Var out = geometric_affine(t, t.constant(random_mat(m * k, c, rng)),
                                   t.constant(center), k, gam);
        CHECK((out->value.array() - 0.75).abs().maxCoeff() == 0.0);
    }
}

TEST_CASE("geometric_affine normalizes moments with alpha=1 beta=0") {
    Rng rng(12);
    // group structure correlates entries within a group, so use many groups
    // to keep the empirical mean of the differences well inside the bound
    const int m = 256, k = 4, c = 8; // 8192 entries
    GamParams gam("gam", c);
    const Mat center = random_mat(m, c, rng, 2.0);
    const Mat nbrs = random_mat(m * k, c, rng, 2.0);
    Tape t;
    Var out = geometric_affine(t, t.constant(nbrs), t.constant(center), k, gam);
    const double mean = out->value.mean();
    const double std_dev =
        std::sqrt((out->value.array() - mean).square().sum() / out->value.size());
    CHECK(std::abs(mean) < 5e-2);
    CHECK(std::abs(std_dev - 1.0) < 5e-2);
}

TEST_CASE("finite differences: geometric_affine end to end") {
    Rng rng(13);
    const int m = 3, k = 4, c = 5;
    GamParams gam("gam", c);
    Parameter nbr("nbr", random_mat(m * k, c, rng));
    Parameter ctr("ctr", random_mat(m, c, rng));
    const Mat wa = random_mat(m * k, c, rng);
    auto build = [&](Tape& t) {
        Var out = geometric_affine(t, t.param(nbr), t.param(ctr), k, gam);
        return weighted_scalar(t, out, wa);
    };
    const auto rep =
        oracle::check_gradients(build, {&nbr, &ctr, &gam.alpha, &gam.beta});
    CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("resp_block: zeroed second linear is an exact identity") {
    Rng rng(14);
    RespBlock block("block", 6, rng);
    block.lin2.weight.value.setZero();
    block.lin2.bias.value.setZero();
    const Mat x = random_mat(9, 6, rng);
    Tape t;
    Var out = block(t, t.constant(x));
    CHECK((out->value - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("resp_block preserves shape and passes finite differences") {
    Rng rng(15);
    RespBlock block("block", 16, rng);
    Parameter x("x", random_mat(8, 16, rng));
    {
        Tape t;
        Var out = block(t, t.param(x));
        CHECK(out->value.rows() == 8);
        CHECK(out->value.cols() == 16);
    }
    const Mat wa = random_mat(8, 16, rng);
    std::vector<Parameter*> params = {&x};
    block.collect(params);
    auto build = [&](Tape& t) { return weighted_scalar(t, block(t, t.param(x)), wa); };
    const auto rep = oracle::check_gradients(build, params, 1e-5, 24);
    CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("backward validates the loss shape") {
    Tape t;
    Var x = t.constant(Mat::Ones(2, 2));
    CHECK_THROWS_AS(t.backward(x), ConfigError);
}

TEST_CASE("shape mismatches are rejected eagerly") {
    Tape t;
    Var a = t.constant(Mat::Ones(2, 2));
    Var b = t.constant(Mat::Ones(3, 2));
    CHECK_THROWS_AS(add(t, a, b), ConfigError);
    CHECK_THROWS_AS(matmul(t, a, b), ConfigError);
    CHECK_THROWS_AS(gather_rows(t, a, {0, 2}), ConfigError);
}
