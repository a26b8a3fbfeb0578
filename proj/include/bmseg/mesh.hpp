#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "bmseg/common.hpp"

namespace bmseg {

// Raw triangle mesh as loaded from a scan. Vertex labels are optional and,
// when coming straight from a label file, still carry the raw dataset codes
// (FDI two-digit tooth codes, 0 for gingiva).
struct TriangleMesh {
    Eigen::MatrixXd vertices;      // V x 3, scanner units (mm)
    Eigen::MatrixXi faces;         // F x 3, indices into vertices
    std::vector<int> vertex_labels; // empty when absent, else size V

    int vertex_count() const { return static_cast<int>(vertices.rows()); }
    int face_count() const { return static_cast<int>(faces.rows()); }
    bool has_labels() const { return !vertex_labels.empty(); }

    // Throws ValidationError naming the offending face/vertex.
    void validate() const;
};

// Per-cell input representation fed to the network.
//   B      : barycenter only (3D)
//   BN     : barycenter + normal at the barycenter (6D) -- the simplified
//            representation this project is built around
//   BVN24  : 3 vertices + barycenter and their 4 normals (24D), the
//            conventional summarization kept for ablations
enum class FeatureMode { B, BN, BVN24 };

int feature_dim(FeatureMode mode);
const char* to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(const std::string& s);

// Fixed-size cloud of mesh cells. `barycenters` is always kept alongside the
// feature matrix because grouping, curve walks and interpolation all operate
// in barycenter coordinate space regardless of the feature mode.
struct CellCloud {
    FeatureMode mode = FeatureMode::BN;
    Eigen::MatrixXd features;    // N x D, D = feature_dim(mode)
    Eigen::MatrixXd barycenters; // N x 3
    std::vector<int> labels;     // empty when absent, else size N, values 0..7

    int size() const { return static_cast<int>(features.rows()); }
    bool has_labels() const { return !labels.empty(); }

    // Checks dimension/mode agreement, unit-length normal blocks (within
    // 1e-5; exactly-zero rows from degenerate faces are tolerated) and label
    // range. Throws ValidationError.
    void validate() const;
};

// Column ranges of the coordinate and normal sub-vectors for a mode, used by
// normalization and augmentation. Each entry is the first column of a 3-wide
// block.
std::vector<int> coordinate_block_offsets(FeatureMode mode);
std::vector<int> normal_block_offsets(FeatureMode mode);

Eigen::MatrixXd compute_barycenters(const TriangleMesh& mesh);

struct FaceNormals {
    Eigen::MatrixXd normals;          // F x 3, unit rows (zero for degenerate)
    std::vector<std::uint8_t> degenerate; // 1 where the face has ~zero area
};

FaceNormals compute_face_normals(const TriangleMesh& mesh);

struct VertexNormals {
    Eigen::MatrixXd normals;        // V x 3, unit rows (zero for isolated)
    std::vector<std::uint8_t> isolated; // 1 where no non-degenerate face touches the vertex
};

// Area-weighted average of incident face normals, renormalized.
VertexNormals compute_vertex_normals(const TriangleMesh& mesh);

struct CellFeatureOptions {
    // The normal placed at the barycenter is the face normal by default; set
    // this to use the renormalized mean of the three interpolated vertex
    // normals instead.
    bool interpolated_barycenter_normal = false;
};

// Assemble the per-cell feature matrix for a mode. Column layout:
//   B     : [bary]
//   BN    : [bary | n_bary]
//   BVN24 : [v0 | v1 | v2 | bary | n(v0) | n(v1) | n(v2) | n(bary)]
// Labels are not transferred here; see preprocess.
CellCloud build_cell_features(const TriangleMesh& mesh, FeatureMode mode,
                              const CellFeatureOptions& options = {});

} // namespace bmseg
