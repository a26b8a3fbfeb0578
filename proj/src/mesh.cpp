#include "bmseg/mesh.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace bmseg {

namespace {
constexpr double kDegenerateArea2 = 1e-24; // squared doubled-area threshold
constexpr double kNormalTol = 1e-5;
} // namespace

void TriangleMesh::validate() const {
    if (vertices.cols() != 3) {
        throw ValidationError("mesh vertices must be V x 3");
    }
    if (faces.rows() > 0 && faces.cols() != 3) {
        throw ValidationError("mesh faces must be F x 3");
    }
    const int v = vertex_count();
    for (int f = 0; f < face_count(); ++f) {
        const int a = faces(f, 0), b = faces(f, 1), c = faces(f, 2);
        if (a < 0 || a >= v || b < 0 || b >= v || c < 0 || c >= v) {
            throw ValidationError("face " + std::to_string(f) +
                                  " references a vertex outside [0, " + std::to_string(v) + ")");
        }
        if (a == b || b == c || a == c) {
            throw ValidationError("face " + std::to_string(f) + " repeats a vertex index");
        }
    }
    if (!vertex_labels.empty() && static_cast<int>(vertex_labels.size()) != v) {
        throw ValidationError("vertex label count " + std::to_string(vertex_labels.size()) +
                              " does not match vertex count " + std::to_string(v));
    }
}

int feature_dim(FeatureMode mode) {
    switch (mode) {
    case FeatureMode::B: return 3;
    case FeatureMode::BN: return 6;
    case FeatureMode::BVN24: return 24;
    }
    throw ConfigError("unknown feature mode");
}

const char* to_string(FeatureMode mode) {
    switch (mode) {
    case FeatureMode::B: return "b";
    case FeatureMode::BN: return "b_n";
    case FeatureMode::BVN24: return "bvn24";
    }
    throw ConfigError("unknown feature mode");
}

FeatureMode feature_mode_from_string(const std::string& s) {
    if (s == "b") return FeatureMode::B;
    if (s == "b_n" || s == "bn") return FeatureMode::BN;
    if (s == "bvn24" || s == "24d") return FeatureMode::BVN24;
    throw ConfigError("unknown feature mode '" + s + "' (expected b, b_n or bvn24)");
}

std::vector<int> coordinate_block_offsets(FeatureMode mode) {
    switch (mode) {
    case FeatureMode::B: return {0};
    case FeatureMode::BN: return {0};
    case FeatureMode::BVN24: return {0, 3, 6, 9};
    }
    throw ConfigError("unknown feature mode");
}

std::vector<int> normal_block_offsets(FeatureMode mode) {
    switch (mode) {
    case FeatureMode::B: return {};
    case FeatureMode::BN: return {3};
    case FeatureMode::BVN24: return {12, 15, 18, 21};
    }
    throw ConfigError("unknown feature mode");
}

void CellCloud::validate() const {
    if (features.cols() != feature_dim(mode)) {
        throw ValidationError("cell cloud feature dimension " + std::to_string(features.cols()) +
                              " does not match mode " + to_string(mode));
    }
    if (barycenters.rows() != features.rows() || barycenters.cols() != 3) {
        throw ValidationError("cell cloud barycenters must be N x 3 with N matching features");
    }
    for (int off : normal_block_offsets(mode)) {
        for (int i = 0; i < size(); ++i) {
            const double n = features.block<1, 3>(i, off).norm();
            if (n != 0.0 && std::abs(n - 1.0) > kNormalTol) {
                throw ValidationError("normal block at column " + std::to_string(off) +
                                      ", row " + std::to_string(i) + " has norm " + std::to_string(n));
            }
        }
    }
    if (!labels.empty()) {
        if (static_cast<int>(labels.size()) != size()) {
            throw ValidationError("cell label count does not match cell count");
        }
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] < 0 || labels[i] > 7) {
                throw ValidationError("cell label " + std::to_string(labels[i]) + " at row " +
                                      std::to_string(i) + " outside [0..7]");
            }
        }
    }
}

Eigen::MatrixXd compute_barycenters(const TriangleMesh& mesh) {
    mesh.validate();
    Eigen::MatrixXd out(mesh.face_count(), 3);
    for (int f = 0; f < mesh.face_count(); ++f) {
        out.row(f) = (mesh.vertices.row(mesh.faces(f, 0)) +
                      mesh.vertices.row(mesh.faces(f, 1)) +
                      mesh.vertices.row(mesh.faces(f, 2))) / 3.0;
    }
    return out;
}

FaceNormals compute_face_normals(const TriangleMesh& mesh) {
    mesh.validate();
    FaceNormals result;
    result.normals.setZero(mesh.face_count(), 3);
    result.degenerate.assign(mesh.face_count(), 0);
    for (int f = 0; f < mesh.face_count(); ++f) {
        const Eigen::RowVector3d v0 = mesh.vertices.row(mesh.faces(f, 0));
        const Eigen::RowVector3d e1 = mesh.vertices.row(mesh.faces(f, 1)) - v0;
        const Eigen::RowVector3d e2 = mesh.vertices.row(mesh.faces(f, 2)) - v0;
        const Eigen::RowVector3d cross = e1.cross(e2);
        const double len2 = cross.squaredNorm();
        if (len2 < kDegenerateArea2) {
            result.degenerate[f] = 1;
            continue;
        }
        result.normals.row(f) = cross / std::sqrt(len2);
    }
    return result;
}

VertexNormals compute_vertex_normals(const TriangleMesh& mesh) {
    const FaceNormals face = compute_face_normals(mesh);
    VertexNormals result;
    result.normals.setZero(mesh.vertex_count(), 3);
    for (int f = 0; f < mesh.face_count(); ++f) {
        if (face.degenerate[f]) continue;
        const Eigen::RowVector3d v0 = mesh.vertices.row(mesh.faces(f, 0));
        const Eigen::RowVector3d e1 = mesh.vertices.row(mesh.faces(f, 1)) - v0;
        const Eigen::RowVector3d e2 = mesh.vertices.row(mesh.faces(f, 2)) - v0;
        const double area = 0.5 * e1.cross(e2).norm();
        for (int j = 0; j < 3; ++j) {
            result.normals.row(mesh.faces(f, j)) += area * face.normals.row(f);
        }
    }
    result.isolated.assign(mesh.vertex_count(), 0);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const double n = result.normals.row(v).norm();
        if (n < 1e-20) {
            result.normals.row(v).setZero();
            result.isolated[v] = 1;
        } else {
            result.normals.row(v) /= n;
        }
    }
    return result;
}

CellCloud build_cell_features(const TriangleMesh& mesh, FeatureMode mode,
                              const CellFeatureOptions& options) {
    const Eigen::MatrixXd bary = compute_barycenters(mesh);
    CellCloud cloud;
    cloud.mode = mode;
    cloud.barycenters = bary;

    if (mode == FeatureMode::B) {
        cloud.features = bary;
        return cloud;
    }

    const FaceNormals face = compute_face_normals(mesh);
    VertexNormals vert;
    if (mode == FeatureMode::BVN24 || options.interpolated_barycenter_normal) {
        vert = compute_vertex_normals(mesh);
    }

    auto barycenter_normal = [&](int f) -> Eigen::RowVector3d {
        if (!options.interpolated_barycenter_normal) {
            return face.normals.row(f);
        }
        Eigen::RowVector3d n = (vert.normals.row(mesh.faces(f, 0)) +
                                vert.normals.row(mesh.faces(f, 1)) +
                                vert.normals.row(mesh.faces(f, 2))) / 3.0;
        const double len = n.norm();
        return len < 1e-20 ? Eigen::RowVector3d::Zero().eval() : (n / len).eval();
    };

    const int n = mesh.face_count();
    if (mode == FeatureMode::BN) {
        cloud.features.resize(n, 6);
        for (int f = 0; f < n; ++f) {
            cloud.features.block<1, 3>(f, 0) = bary.row(f);
            cloud.features.block<1, 3>(f, 3) = barycenter_normal(f);
        }
        return cloud;
    }

    // BVN24: coordinates of the three vertices and the barycenter first, then
    // the four matching normals.
    cloud.features.resize(n, 24);
    for (int f = 0; f < n; ++f) {
        for (int j = 0; j < 3; ++j) {
            cloud.features.block<1, 3>(f, 3 * j) = mesh.vertices.row(mesh.faces(f, j));
            cloud.features.block<1, 3>(f, 12 + 3 * j) = vert.normals.row(mesh.faces(f, j));
        }
        cloud.features.block<1, 3>(f, 9) = bary.row(f);
        cloud.features.block<1, 3>(f, 21) = barycenter_normal(f);
    }
    return cloud;
}

} // namespace bmseg
