#include "bmseg/knn.hpp"

#include <algorithm>
#include <cmath>

#include "bmseg/common.hpp"

namespace bmseg {

namespace {

bool hit_less(const KnnHit& a, const KnnHit& b) {
    return a.d2 != b.d2 ? a.d2 < b.d2 : a.index < b.index;
}

} // namespace

std::vector<KnnHit> knn_brute_force(const Eigen::RowVector3d& query,
                                    const Eigen::MatrixXd& points, int k) {
    const int n = static_cast<int>(points.rows());
    if (n == 0) throw ValidationError("knn over an empty point set");
    k = std::min(k, n);
    std::vector<KnnHit> hits(n);
    for (int i = 0; i < n; ++i) {
        hits[i] = {(points.row(i) - query).squaredNorm(), i};
    }
    std::partial_sort(hits.begin(), hits.begin() + k, hits.end(), hit_less);
    hits.resize(k);
    return hits;
}

PointGrid::PointGrid(const Eigen::MatrixXd& points) : points_(points) {
    const int n = static_cast<int>(points_.rows());
    if (n == 0) throw ValidationError("cannot build a grid over an empty point set");
    const Eigen::RowVector3d lo = points_.colwise().minCoeff();
    const Eigen::RowVector3d hi = points_.colwise().maxCoeff();
    const double diag = (hi - lo).norm();
    if (diag < 1e-300) {
        degenerate_ = true;
        return;
    }
    cell_size_ = std::max(diag / std::cbrt(static_cast<double>(n)), diag * 1e-9);
    for (int i = 0; i < n; ++i) {
        const CellKey key = cell_of(points_.row(i));
        if (i == 0) {
            cell_lo_ = cell_hi_ = key;
        } else {
            cell_lo_ = {std::min(cell_lo_.x, key.x), std::min(cell_lo_.y, key.y),
                        std::min(cell_lo_.z, key.z)};
            cell_hi_ = {std::max(cell_hi_.x, key.x), std::max(cell_hi_.y, key.y),
                        std::max(cell_hi_.z, key.z)};
        }
        cells_[key].push_back(i);
    }
}

PointGrid::CellKey PointGrid::cell_of(const Eigen::RowVector3d& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_size_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_size_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_size_))};
}

std::vector<KnnHit> PointGrid::query(const Eigen::RowVector3d& q, int k) const {
    const int n = size();
    k = std::min(k, n);
    if (degenerate_) {
        return knn_brute_force(q, points_, k);
    }

    std::vector<KnnHit> best; // kept sorted, size <= k
    best.reserve(k + 1);
    auto consider = [&](int idx) {
        KnnHit h{(points_.row(idx) - q).squaredNorm(), idx};
        if (static_cast<int>(best.size()) == k && !hit_less(h, best.back())) return;
        best.insert(std::upper_bound(best.begin(), best.end(), h, hit_less), h);
        if (static_cast<int>(best.size()) > k) best.pop_back();
    };

    const CellKey center = cell_of(q);
    // Last shell that can still contain populated cells.
    const std::int64_t max_shell =
        std::max({std::llabs(cell_lo_.x - center.x), std::llabs(cell_hi_.x - center.x),
                  std::llabs(cell_lo_.y - center.y), std::llabs(cell_hi_.y - center.y),
                  std::llabs(cell_lo_.z - center.z), std::llabs(cell_hi_.z - center.z)});
    // Scan concentric Chebyshev shells. Any point in a cell of shell radius
    // r+1 or beyond is at Euclidean distance >= r*cell_size from q, so stop
    // once the k-th best is strictly inside that bound.
    for (std::int64_t r = 0;; ++r) {
        for (std::int64_t dx = -r; dx <= r; ++dx) {
            for (std::int64_t dy = -r; dy <= r; ++dy) {
                for (std::int64_t dz = -r; dz <= r; ++dz) {
                    if (std::max({std::llabs(dx), std::llabs(dy), std::llabs(dz)}) != r) continue;
                    auto it = cells_.find(CellKey{center.x + dx, center.y + dy, center.z + dz});
                    if (it == cells_.end()) continue;
                    for (int idx : it->second) consider(idx);
                }
            }
        }
        const double bound = static_cast<double>(r) * cell_size_;
        if (static_cast<int>(best.size()) == k && best.back().d2 < bound * bound) {
            break;
        }
        if (r >= max_shell) break;
    }
    return best;
}

} // namespace bmseg
