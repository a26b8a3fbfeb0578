#include "bmseg/nn/point_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bmseg::nn {

namespace {

// Lexicographic comparison of coordinates; used only to settle exact
// distance ties by content rather than by row index.
bool lex_less(const Eigen::MatrixXd& pts, int a, int b) {
    for (int j = 0; j < pts.cols(); ++j) {
        if (pts(a, j) != pts(b, j)) return pts(a, j) < pts(b, j);
    }
    return false;
}

} // namespace

std::vector<int> farthest_point_sample(const Eigen::MatrixXd& points, int m) {
    const int n = static_cast<int>(points.rows());
    if (m > n) {
        throw ConfigError("farthest point sampling asked for " + std::to_string(m) +
                          " of " + std::to_string(n) + " points");
    }
    if (m <= 0) return {};

    const Eigen::RowVector3d centroid = points.colwise().mean();
    int start = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
        const double d = (points.row(i) - centroid).squaredNorm();
        if (d > best || (d == best && lex_less(points, i, start))) {
            best = d;
            start = i;
        }
    }

    std::vector<int> chosen;
    chosen.reserve(m);
    std::vector<char> taken(n, 0);
    chosen.push_back(start);
    taken[start] = 1;
    Eigen::VectorXd min_d2 =
        (points.rowwise() - points.row(start)).rowwise().squaredNorm();
    for (int step = 1; step < m; ++step) {
        int next = -1;
        double far = -1.0;
        for (int i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double d = min_d2(i);
            if (d > far || (d == far && next >= 0 && lex_less(points, i, next))) {
                far = d;
                next = i;
            }
        }
        chosen.push_back(next);
        taken[next] = 1;
        min_d2 = min_d2.cwiseMin(
            (points.rowwise() - points.row(next)).rowwise().squaredNorm());
    }
    return chosen;
}

Eigen::MatrixXi knn_indices(const Eigen::MatrixXd& query, const Eigen::MatrixXd& ref, int k,
                            const std::vector<int>* self_index) {
    const int q = static_cast<int>(query.rows());
    const int n = static_cast<int>(ref.rows());
    const int effective = self_index ? n - 1 : n;
    if (k > effective) {
        throw ConfigError("knn asked for " + std::to_string(k) + " neighbors among " +
                          std::to_string(effective));
    }
    Eigen::MatrixXi out(q, k);
    std::vector<std::pair<double, int>> dists(n);
    for (int i = 0; i < q; ++i) {
        const int skip = self_index ? (*self_index)[i] : -1;
        int count = 0;
        for (int j = 0; j < n; ++j) {
            if (j == skip) continue;
            dists[count++] = {(ref.row(j) - query.row(i)).squaredNorm(), j};
        }
        std::partial_sort(dists.begin(), dists.begin() + k, dists.begin() + count);
        for (int j = 0; j < k; ++j) out(i, j) = dists[j].second;
    }
    return out;
}

IdwInterp idw_weights(const Eigen::MatrixXd& query, const Eigen::MatrixXd& ref, int k) {
    const int q = static_cast<int>(query.rows());
    IdwInterp interp;
    interp.indices.resize(q, k);
    interp.weights.resize(q, k);
    const Eigen::MatrixXi idx = knn_indices(query, ref, k, nullptr);
    constexpr double kExactHit = 1e-20;
    for (int i = 0; i < q; ++i) {
        double total = 0.0;
        int exact = -1;
        Eigen::RowVectorXd w(k);
        for (int j = 0; j < k; ++j) {
            interp.indices(i, j) = idx(i, j);
            const double d = (ref.row(idx(i, j)) - query.row(i)).norm();
            if (d < kExactHit && exact < 0) exact = j;
            w(j) = 1.0 / (d + kExactHit);
            total += w(j);
        }
        if (exact >= 0) {
            interp.weights.row(i).setZero();
            interp.weights(i, exact) = 1.0;
        } else {
            interp.weights.row(i) = w / total;
        }
    }
    return interp;
}

std::vector<int> flatten_indices(const Eigen::MatrixXi& idx) {
    std::vector<int> flat(static_cast<std::size_t>(idx.rows()) * idx.cols());
    std::size_t r = 0;
    for (int i = 0; i < idx.rows(); ++i) {
        for (int j = 0; j < idx.cols(); ++j) flat[r++] = idx(i, j);
    }
    return flat;
}

} // namespace bmseg::nn
