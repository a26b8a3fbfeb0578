#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "bmseg/nn/point_ops.hpp"

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

double min_pairwise_distance(const Eigen::MatrixXd& pts, const std::vector<int>& subset) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < subset.size(); ++i) {
        for (std::size_t j = i + 1; j < subset.size(); ++j) {
            best = std::min(best, (pts.row(subset[i]) - pts.row(subset[j])).norm());
        }
    }
    return best;
}

} // namespace

TEST_CASE("fps with m = M is a permutation covering all indices") {
    const Eigen::MatrixXd pts = random_points(24, 5);
    const auto idx = farthest_point_sample(pts, 24);
    std::set<int> unique(idx.begin(), idx.end());
    CHECK(unique.size() == 24);
}

TEST_CASE("fps on a square picks a diagonal pair") {
    Eigen::MatrixXd pts(4, 3);
    pts << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
    const auto idx = farthest_point_sample(pts, 2);
    const double d = (pts.row(idx[0]) - pts.row(idx[1])).norm();
    CHECK(d == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("fps beats random subsets on min pairwise distance") {
    const Eigen::MatrixXd pts = random_points(64, 7);
    const auto chosen = farthest_point_sample(pts, 16);
    const double fps_spread = min_pairwise_distance(pts, chosen);

    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<int> subset(64);
        std::iota(subset.begin(), subset.end(), 0);
        for (int i = 63; i > 0; --i) std::swap(subset[i], subset[rng.uniform_int(0, i)]);
        subset.resize(16);
        CHECK(min_pairwise_distance(pts, subset) <= fps_spread);
    }
}

TEST_CASE("fps start is content-determined: row order does not matter") {
    const Eigen::MatrixXd pts = random_points(40, 9);
    const auto base = farthest_point_sample(pts, 10);

    // reverse the rows
    Eigen::MatrixXd rev(40, 3);
    for (int i = 0; i < 40; ++i) rev.row(i) = pts.row(39 - i);
    const auto flipped = farthest_point_sample(rev, 10);
    for (int i = 0; i < 10; ++i) {
        CHECK((pts.row(base[i]) - rev.row(flipped[i])).norm() == 0.0);
    }
}

TEST_CASE("fps rejects oversampling") {
    const Eigen::MatrixXd pts = random_points(5, 1);
    CHECK_THROWS_AS(farthest_point_sample(pts, 6), ConfigError);
}

TEST_CASE("knn returns sorted true neighbors") {
    const Eigen::MatrixXd ref = random_points(100, 13);
    const Eigen::MatrixXd query = random_points(20, 14);
    const Eigen::MatrixXi idx = knn_indices(query, ref, 5, nullptr);
    for (int i = 0; i < 20; ++i) {
        std::vector<std::pair<double, int>> all(100);
        for (int j = 0; j < 100; ++j) {
            all[j] = {(ref.row(j) - query.row(i)).squaredNorm(), j};
        }
        std::sort(all.begin(), all.end());
        for (int j = 0; j < 5; ++j) CHECK(idx(i, j) == all[j].second);
    }
}

TEST_CASE("knn exclude_self skips the matching reference row") {
    const Eigen::MatrixXd pts = random_points(30, 15);
    std::vector<int> self(30);
    std::iota(self.begin(), self.end(), 0);
    const Eigen::MatrixXi idx = knn_indices(pts, pts, 4, &self);
    for (int i = 0; i < 30; ++i) {
        for (int j = 0; j < 4; ++j) CHECK(idx(i, j) != i);
    }
    // without exclusion the nearest neighbor is the point itself
    const Eigen::MatrixXi with_self = knn_indices(pts, pts, 1, nullptr);
    for (int i = 0; i < 30; ++i) CHECK(with_self(i, 0) == i);
}

TEST_CASE("knn validates k against the effective reference count") {
    const Eigen::MatrixXd pts = random_points(4, 17);
    std::vector<int> self = {0, 1, 2, 3};
    CHECK_THROWS_AS(knn_indices(pts, pts, 4, &self), ConfigError);
    CHECK_NOTHROW(knn_indices(pts, pts, 4, nullptr));
}

TEST_CASE("idw weights: rows sum to one, inverse-distance ordering") {
    const Eigen::MatrixXd ref = random_points(50, 19);
    const Eigen::MatrixXd query = random_points(10, 20);
    const IdwInterp interp = idw_weights(query, ref, 3);
    for (int i = 0; i < 10; ++i) {
        CHECK(interp.weights.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
        // nearer neighbors have larger weights
        CHECK(interp.weights(i, 0) >= interp.weights(i, 1));
        CHECK(interp.weights(i, 1) >= interp.weights(i, 2));
    }
}

TEST_CASE("idw exact hit collapses onto the matching point") {
    const Eigen::MatrixXd ref = random_points(20, 21);
    Eigen::MatrixXd query(1, 3);
    query.row(0) = ref.row(7);
    const IdwInterp interp = idw_weights(query, ref, 3);
    CHECK(interp.indices(0, 0) == 7);
    CHECK(interp.weights(0, 0) == 1.0);
    CHECK(interp.weights(0, 1) == 0.0);
    CHECK(interp.weights(0, 2) == 0.0);
}
