#pragma once

#include <Eigen/Core>
#include <vector>

#include "bmseg/common.hpp"

namespace bmseg::nn {

// Greedy max-min farthest point sampling. The start is content-determined
// (the point farthest from the centroid, coordinate-lexicographic on exact
// ties) so identical point sets produce identical selection sequences
// regardless of row order.
std::vector<int> farthest_point_sample(const Eigen::MatrixXd& points, int m);

// Row i holds the k nearest reference rows to query row i, nearest first.
// Ties resolve by reference index. With exclude_self, query row i is assumed
// to be reference row self_index[i] and is skipped.
Eigen::MatrixXi knn_indices(const Eigen::MatrixXd& query, const Eigen::MatrixXd& ref, int k,
                            const std::vector<int>* self_index = nullptr);

// Inverse-distance interpolation weights: for each query, the k nearest
// reference points with weights proportional to 1/d, normalized per row.
// An exact hit collapses the row onto that reference point.
struct IdwInterp {
    Eigen::MatrixXi indices; // Q x k
    Eigen::MatrixXd weights; // Q x k, rows sum to 1
};

IdwInterp idw_weights(const Eigen::MatrixXd& query, const Eigen::MatrixXd& ref, int k);

// Flatten a Q x k index matrix into the row order used by the grouped ops.
std::vector<int> flatten_indices(const Eigen::MatrixXi& idx);

} // namespace bmseg::nn
