#include <doctest.h>

#include "bmseg/knn.hpp"
#include "bmseg/preprocess.hpp"
#include "support/oracles.hpp"

using namespace bmseg;

namespace {

Eigen::MatrixXd random_points(int n, Rng& rng, double span = 10.0) {
    Eigen::MatrixXd pts(n, 3);
    for (int i = 0; i < n; ++i) {
        pts.row(i) << rng.uniform(-span, span), rng.uniform(-span, span),
            rng.uniform(-span, span);
    }
    return pts;
}

CellCloud cloud_from_points(const Eigen::MatrixXd& pts) {
    CellCloud cloud;
    cloud.mode = FeatureMode::B;
    cloud.features = pts;
    cloud.barycenters = pts;
    return cloud;
}

} // namespace

TEST_CASE("grid knn equals brute force on random data, including ties") {
    Rng rng(4242);
    const Eigen::MatrixXd pts = random_points(20000, rng);
    const PointGrid grid(pts);
    for (int trial = 0; trial < 300; ++trial) {
        const Eigen::RowVector3d q(rng.uniform(-12, 12), rng.uniform(-12, 12),
                                   rng.uniform(-12, 12));
        const auto got = grid.query(q, 5);
        const auto want = knn_brute_force(q, pts, 5);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].index == want[i].index);
            CHECK(got[i].d2 == want[i].d2);
        }
    }
}

TEST_CASE("grid knn handles coincident point sets") {
    Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(8, 3);
    const PointGrid grid(pts);
    const auto hits = grid.query({0.1, 0, 0}, 3);
    CHECK(hits.size() == 3);
    CHECK(hits[0].index == 0); // index ties resolve upward
    CHECK(hits[1].index == 1);
}

TEST_CASE("k=1 transfer copies the label of a coincident source point") {
    Rng rng(7);
    const Eigen::MatrixXd src = random_points(50, rng);
    std::vector<int> labels(50);
    for (int i = 0; i < 50; ++i) labels[i] = rng.uniform_int(0, 7);
    CellCloud target = cloud_from_points(src.topRows(10));
    LabelTransferConfig cfg;
    cfg.k = 1;
    const auto out = transfer_labels_knn(src, labels, target, cfg);
    for (int i = 0; i < 10; ++i) CHECK(out[i] == labels[i]);
}

TEST_CASE("k=3 majority vote: {2,2,5} -> 2") {
    Eigen::MatrixXd src(3, 3);
    src << 0, 0, 0, 0.1, 0, 0, 0, 0.1, 0;
    const std::vector<int> labels = {2, 5, 2};
    CellCloud target = cloud_from_points(Eigen::MatrixXd::Zero(1, 3));
    const auto out = transfer_labels_knn(src, labels, target, {});
    CHECK(out[0] == 2);
}

TEST_CASE("vote ties resolve to the lowest class id") {
    Eigen::MatrixXd src(4, 3);
    src << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0;
    const std::vector<int> labels = {6, 3, 6, 3};
    CellCloud target = cloud_from_points(Eigen::MatrixXd::Zero(1, 3));
    LabelTransferConfig cfg;
    cfg.k = 4;
    const auto out = transfer_labels_knn(src, labels, target, cfg);
    CHECK(out[0] == 3);
}

TEST_CASE("label transfer matches the exhaustive scan oracle exactly") {
    Rng rng(1234);
    const Eigen::MatrixXd src = random_points(500, rng);
    std::vector<int> labels(500);
    for (int i = 0; i < 500; ++i) labels[i] = rng.uniform_int(0, 7);
    const Eigen::MatrixXd targets = random_points(200, rng);
    CellCloud target = cloud_from_points(targets);

    for (int k : {1, 3, 5}) {
        LabelTransferConfig cfg;
        cfg.k = k;
        const auto got = transfer_labels_knn(src, labels, target, cfg);
        const auto want = oracle::knn_transfer_scan(src, labels, targets, k);
        CHECK(got == want);
    }
}

TEST_CASE("label transfer is deterministic") {
    Rng rng(5);
    const Eigen::MatrixXd src = random_points(300, rng);
    std::vector<int> labels(300);
    for (int i = 0; i < 300; ++i) labels[i] = rng.uniform_int(0, 7);
    CellCloud target = cloud_from_points(random_points(100, rng));
    const auto a = transfer_labels_knn(src, labels, target, {});
    const auto b = transfer_labels_knn(src, labels, target, {});
    CHECK(a == b);
}

TEST_CASE("every transferred label appears among the cell's k nearest sources") {
    Rng rng(77);
    const Eigen::MatrixXd src = random_points(400, rng);
    std::vector<int> labels(400);
    for (int i = 0; i < 400; ++i) labels[i] = rng.uniform_int(0, 7);
    const Eigen::MatrixXd targets = random_points(150, rng);
    CellCloud target = cloud_from_points(targets);
    LabelTransferConfig cfg;
    cfg.k = 3;
    const auto out = transfer_labels_knn(src, labels, target, cfg);
    for (int i = 0; i < 150; ++i) {
        const auto hits = knn_brute_force(targets.row(i), src, cfg.k);
        bool found = false;
        for (const auto& h : hits) {
            if (labels[h.index] == out[i]) found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("label transfer rejects empty and undersized sources") {
    CellCloud target = cloud_from_points(Eigen::MatrixXd::Zero(1, 3));
    CHECK_THROWS_AS(transfer_labels_knn(Eigen::MatrixXd(0, 3), {}, target, {}),
                    ValidationError);
    Eigen::MatrixXd src(2, 3);
    src.setZero();
    LabelTransferConfig cfg;
    cfg.k = 3;
    CHECK_THROWS_AS(transfer_labels_knn(src, {1, 2}, target, cfg), ValidationError);
}

TEST_CASE("normalization: already-normalized clouds are fixed points") {
    Rng rng(31);
    CellCloud cloud = cloud_from_points(random_points(64, rng));
    const auto [normed, rec] = normalize_cloud(cloud);
    const auto [again, rec2] = normalize_cloud(normed);
    CHECK((again.features - normed.features).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(rec2.center.norm() < 1e-9);
    CHECK(rec2.scale == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("normalization is translation invariant") {
    Rng rng(32);
    CellCloud cloud = cloud_from_points(random_points(64, rng));
    CellCloud shifted = cloud;
    shifted.features.rowwise() += Eigen::RowVector3d(5, -3, 11);
    shifted.barycenters = shifted.features;
    const auto [a, ra] = normalize_cloud(cloud);
    const auto [b, rb] = normalize_cloud(shifted);
    CHECK((a.features - b.features).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("normalized output re-measures as centered with max radius 1") {
    Rng rng(33);
    CellCloud cloud = cloud_from_points(random_points(128, rng, 40.0));
    const auto [normed, rec] = normalize_cloud(cloud);
    CHECK(normed.barycenters.colwise().mean().norm() < 1e-9);
    CHECK(normed.barycenters.rowwise().norm().maxCoeff() == doctest::Approx(1.0).epsilon(1e-9));
    // record inverts back to scanner space
    for (int i = 0; i < 5; ++i) {
        const Eigen::RowVector3d back = rec.to_scanner(normed.barycenters.row(i));
        CHECK((back - cloud.barycenters.row(i)).norm() < 1e-9);
    }
}

TEST_CASE("normalization applies the same transform to all coordinate blocks") {
    Rng rng(34);
    CellCloud cloud;
    cloud.mode = FeatureMode::BVN24;
    const int n = 40;
    cloud.features.resize(n, 24);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 24; ++j) cloud.features(i, j) = rng.uniform(-5, 5);
    }
    // make the normal blocks unit so validation passes
    for (int off : normal_block_offsets(FeatureMode::BVN24)) {
        for (int i = 0; i < n; ++i) {
            cloud.features.block<1, 3>(i, off).normalize();
        }
    }
    cloud.barycenters = cloud.features.middleCols(9, 3);
    const Eigen::MatrixXd normals_before =
        cloud.features.rightCols(12);
    const auto [normed, rec] = normalize_cloud(cloud);
    CHECK(normed.features.rightCols(12) == normals_before);
    for (int off : {0, 3, 6, 9}) {
        const Eigen::MatrixXd want =
            (cloud.features.middleCols(off, 3).rowwise() - rec.center) / rec.scale;
        CHECK((normed.features.middleCols(off, 3) - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("coincident clouds cannot be normalized") {
    CellCloud cloud = cloud_from_points(Eigen::MatrixXd::Zero(5, 3));
    CHECK_THROWS_AS(normalize_cloud(cloud), ValidationError);
}
