#pragma once

// Independent reference implementations used by tests and the acceptance
// suite. Everything here is deliberately written as plain loops, separate
// from the library code paths it checks.

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "bmseg/mesh.hpp"
#include "bmseg/nn/tape.hpp"

namespace bmseg::oracle {

// Per-face vertex averaging, one face at a time.
Eigen::MatrixXd barycenters_loop(const TriangleMesh& mesh);

// Vertex normals by explicit incidence accumulation.
Eigen::MatrixXd vertex_normals_loop(const TriangleMesh& mesh);

// Exhaustive O(N*P) k-nearest majority vote, ties to the lowest class id.
std::vector<int> knn_transfer_scan(const Eigen::MatrixXd& source_points,
                                   const std::vector<int>& source_labels,
                                   const Eigen::MatrixXd& targets, int k);

// Pairwise tally loop.
Eigen::Matrix<std::int64_t, 8, 8> confusion_tally(const std::vector<int>& truth,
                                                  const std::vector<int>& pred);

// Subdivided icosahedron with 20 * 4^level faces on the unit sphere.
TriangleMesh icosphere(int level);

// Exact point-to-triangle distance.
double point_triangle_distance(const Eigen::RowVector3d& p, const Eigen::RowVector3d& a,
                               const Eigen::RowVector3d& b, const Eigen::RowVector3d& c);

// Symmetric sampled Hausdorff estimate: samples points uniformly on each
// surface and takes the max over both directions of the distance to the
// other mesh.
double sampled_hausdorff(const TriangleMesh& a, const TriangleMesh& b, int samples_per_mesh,
                         std::uint64_t seed);

// Random mesh over a jittered grid patch; every face valid, no degenerates.
TriangleMesh random_patch_mesh(int rows, int cols, std::uint64_t seed);

struct GradCheckReport {
    double max_rel_err = 0.0;
    int checked = 0;
};

// Central finite differences against the analytic gradients produced by one
// backward pass. `build` reconstructs the scalar loss from the current
// parameter values. Checks up to max_coords coordinates per parameter
// (deterministically strided).
GradCheckReport check_gradients(const std::function<nn::Var(nn::Tape&)>& build,
                                const std::vector<nn::Parameter*>& params,
                                double step = 1e-5, int max_coords = 64);

} // namespace bmseg::oracle
