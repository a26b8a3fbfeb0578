#include "bmseg/decimate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_set>

namespace bmseg {

namespace {

constexpr double kBoundaryPenalty = 1e3;
constexpr double kFlipTolerance = 1e-10;

using Quadric = Eigen::Matrix4d;

Quadric plane_quadric(const Eigen::RowVector3d& n, double d, double weight) {
    Eigen::Vector4d p;
    p << n.x(), n.y(), n.z(), d;
    return weight * (p * p.transpose());
}

double quadric_cost(const Quadric& q, const Eigen::RowVector3d& x) {
    Eigen::Vector4d h;
    h << x.x(), x.y(), x.z(), 1.0;
    return std::max(0.0, h.dot(q * h));
}

struct HeapEntry {
    double cost;
    int u, v;
    std::uint64_t stamp_u, stamp_v;
    bool operator>(const HeapEntry& o) const {
        if (cost != o.cost) return cost > o.cost;
        if (u != o.u) return u > o.u;
        return v > o.v;
    }
};

class Decimator {
public:
    Decimator(const TriangleMesh& mesh, const DecimationConfig& cfg)
        : cfg_(cfg), positions_(mesh.vertices), faces_(mesh.faces) {
        const int nv = static_cast<int>(positions_.rows());
        const int nf = static_cast<int>(faces_.rows());
        alive_vertex_.assign(nv, 1);
        alive_face_.assign(nf, 1);
        stamp_.assign(nv, 0);
        quadrics_.assign(nv, Quadric::Zero());
        incident_.assign(nv, {});
        live_faces_ = nf;
        for (int f = 0; f < nf; ++f) {
            for (int j = 0; j < 3; ++j) incident_[faces_(f, j)].push_back(f);
        }
        accumulate_plane_quadrics();
        if (cfg_.preserve_boundary) accumulate_boundary_quadrics();
        seed_heap();
    }

    TriangleMesh run() {
        while (live_faces_ > cfg_.target_cells && !heap_.empty()) {
            const HeapEntry e = heap_.top();
            heap_.pop();
            if (!entry_current(e)) continue;
            if (cfg_.max_quadric_error && e.cost > *cfg_.max_quadric_error) break;
            collapse(e.u, e.v);
        }
        if (live_faces_ > cfg_.target_cells + 2) {
            throw ValidationError("decimation ran out of valid collapses at " +
                                  std::to_string(live_faces_) + " faces (target " +
                                  std::to_string(cfg_.target_cells) + ")");
        }
        return rebuild();
    }

private:
    void accumulate_plane_quadrics() {
        for (int f = 0; f < static_cast<int>(faces_.rows()); ++f) {
            const Eigen::RowVector3d a = positions_.row(faces_(f, 0));
            const Eigen::RowVector3d e1 = positions_.row(faces_(f, 1)) - a;
            const Eigen::RowVector3d e2 = positions_.row(faces_(f, 2)) - a;
            const Eigen::RowVector3d cross = e1.cross(e2);
            const double len = cross.norm();
            if (len < 1e-20) continue;
            const Eigen::RowVector3d n = cross / len;
            const double area = 0.5 * len;
            const Quadric q = plane_quadric(n, -n.dot(a), area);
            for (int j = 0; j < 3; ++j) quadrics_[faces_(f, j)] += q;
        }
    }

    // Constraint planes through boundary edges, perpendicular to the face.
    void accumulate_boundary_quadrics() {
        std::unordered_map<std::uint64_t, std::pair<int, int>> edge_count; // key -> (count, face)
        auto key = [](int a, int b) {
            if (a > b) std::swap(a, b);
            return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
        };
        for (int f = 0; f < static_cast<int>(faces_.rows()); ++f) {
            for (int j = 0; j < 3; ++j) {
                auto& slot = edge_count[key(faces_(f, j), faces_(f, (j + 1) % 3))];
                ++slot.first;
                slot.second = f;
            }
        }
        for (const auto& [k, slot] : edge_count) {
            if (slot.first != 1) continue;
            const int a = static_cast<int>(k >> 32);
            const int b = static_cast<int>(k & 0xffffffffu);
            const int f = slot.second;
            const Eigen::RowVector3d pa = positions_.row(a);
            const Eigen::RowVector3d pb = positions_.row(b);
            const Eigen::RowVector3d fa = positions_.row(faces_(f, 0));
            const Eigen::RowVector3d e1 = positions_.row(faces_(f, 1)) - fa;
            const Eigen::RowVector3d e2 = positions_.row(faces_(f, 2)) - fa;
            const Eigen::RowVector3d fn = e1.cross(e2);
            Eigen::RowVector3d cn = (pb - pa).cross(fn);
            const double len = cn.norm();
            if (len < 1e-20) continue;
            cn /= len;
            const Quadric q =
                plane_quadric(cn, -cn.dot(pa), kBoundaryPenalty * (pb - pa).squaredNorm());
            quadrics_[a] += q;
            quadrics_[b] += q;
        }
    }

    void seed_heap() {
        std::unordered_set<std::uint64_t> seen;
        for (int f = 0; f < static_cast<int>(faces_.rows()); ++f) {
            for (int j = 0; j < 3; ++j) {
                int a = faces_(f, j), b = faces_(f, (j + 1) % 3);
                if (a > b) std::swap(a, b);
                const std::uint64_t k =
                    (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
                if (seen.insert(k).second) push_edge(a, b);
            }
        }
    }

    struct Candidate {
        Eigen::RowVector3d position;
        double cost;
    };

    Candidate best_placement(int u, int v) const {
        const Quadric q = quadrics_[u] + quadrics_[v];
        const Eigen::Matrix3d a = q.topLeftCorner<3, 3>();
        const Eigen::Vector3d b = -q.topRightCorner<3, 1>();
        Candidate c;
        const double pivot_scale = a.cwiseAbs().maxCoeff();
        bool solved = false;
        if (pivot_scale > 0.0) {
            const Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
            if (lu.isInvertible()) {
                c.position = lu.solve(b).transpose();
                solved = true;
            }
        }
        if (!solved) {
            // Ill-conditioned quadric: fall back to the best of the
            // endpoints and the midpoint.
            const Eigen::RowVector3d mid = 0.5 * (positions_.row(u) + positions_.row(v));
            c.position = positions_.row(u);
            double best = quadric_cost(q, c.position);
            const double cv = quadric_cost(q, positions_.row(v));
            if (cv < best) {
                best = cv;
                c.position = positions_.row(v);
            }
            const double cm = quadric_cost(q, mid);
            if (cm < best) c.position = mid;
        }
        c.cost = quadric_cost(q, c.position);
        return c;
    }

    void push_edge(int u, int v) {
        if (u > v) std::swap(u, v);
        heap_.push({best_placement(u, v).cost, u, v, stamp_[u], stamp_[v]});
    }

    bool entry_current(const HeapEntry& e) const {
        if (!alive_vertex_[e.u] || !alive_vertex_[e.v]) return false;
        if (stamp_[e.u] != e.stamp_u || stamp_[e.v] != e.stamp_v) return false;
        for (int f : incident_[e.u]) {
            if (!alive_face_[f]) continue;
            for (int j = 0; j < 3; ++j) {
                if (faces_(f, j) == e.v) return true;
            }
        }
        return false;
    }

    std::vector<int> live_incident(int v) const {
        std::vector<int> out;
        out.reserve(incident_[v].size());
        for (int f : incident_[v]) {
            if (alive_face_[f]) out.push_back(f);
        }
        return out;
    }

    bool face_contains(int f, int v) const {
        return faces_(f, 0) == v || faces_(f, 1) == v || faces_(f, 2) == v;
    }

    bool collapse(int u, int v) {
        const auto faces_u = live_incident(u);
        const auto faces_v = live_incident(v);

        std::vector<int> shared;
        for (int f : faces_u) {
            if (face_contains(f, v)) shared.push_back(f);
        }
        if (shared.empty() || shared.size() > 2) return false; // dangling or non-manifold edge

        // Removing more faces than the target window allows would overshoot;
        // leave this edge for good.
        if (live_faces_ - static_cast<int>(shared.size()) < cfg_.target_cells) return false;

        // Link condition: every vertex adjacent to both endpoints must be an
        // opposite corner of a shared face, otherwise the collapse would fold
        // two faces onto each other.
        std::unordered_set<int> ring_u;
        for (int f : faces_u) {
            for (int j = 0; j < 3; ++j) {
                const int w = faces_(f, j);
                if (w != u && w != v) ring_u.insert(w);
            }
        }
        std::unordered_set<int> opposite;
        for (int f : shared) {
            for (int j = 0; j < 3; ++j) {
                const int w = faces_(f, j);
                if (w != u && w != v) opposite.insert(w);
            }
        }
        for (int f : faces_v) {
            for (int j = 0; j < 3; ++j) {
                const int w = faces_(f, j);
                if (w == u || w == v) continue;
                if (ring_u.count(w) && !opposite.count(w)) return false;
            }
        }

        const Candidate cand = best_placement(u, v);

        // Reject the collapse if any surviving face would flip or degenerate.
        auto surviving_ok = [&](const std::vector<int>& fs, int moved) {
            for (int f : fs) {
                if (face_contains(f, u) && face_contains(f, v)) continue; // removed
                Eigen::RowVector3d p[3];
                Eigen::RowVector3d p_new[3];
                for (int j = 0; j < 3; ++j) {
                    const int w = faces_(f, j);
                    p[j] = positions_.row(w);
                    p_new[j] = (w == moved) ? cand.position : positions_.row(w);
                }
                const Eigen::RowVector3d n_old = (p[1] - p[0]).cross(p[2] - p[0]);
                const Eigen::RowVector3d n_new = (p_new[1] - p_new[0]).cross(p_new[2] - p_new[0]);
                if (n_new.norm() < 1e-20) return false;
                if (n_old.dot(n_new) <= kFlipTolerance * n_old.norm() * n_new.norm()) return false;
            }
            return true;
        };
        if (!surviving_ok(faces_u, u) || !surviving_ok(faces_v, v)) return false;

        // Commit: drop the shared faces, reroute v's faces to u.
        for (int f : shared) {
            alive_face_[f] = 0;
            --live_faces_;
        }
        for (int f : faces_v) {
            if (!alive_face_[f]) continue;
            for (int j = 0; j < 3; ++j) {
                if (faces_(f, j) == v) faces_(f, j) = u;
            }
            incident_[u].push_back(f);
        }
        positions_.row(u) = cand.position;
        quadrics_[u] += quadrics_[v];
        alive_vertex_[v] = 0;
        incident_[v].clear();
        ++stamp_[u];
        ++stamp_[v];

        // Compact u's incidence and refresh the costs of its edges.
        auto& inc = incident_[u];
        inc.erase(std::remove_if(inc.begin(), inc.end(),
                                 [&](int f) { return !alive_face_[f]; }),
                  inc.end());
        std::unordered_set<int> neighbors;
        for (int f : inc) {
            for (int j = 0; j < 3; ++j) {
                const int w = faces_(f, j);
                if (w != u) neighbors.insert(w);
            }
        }
        // Only edges incident to the merged vertex change cost; their stale
        // heap entries died with the stamp bump above.
        for (int w : neighbors) push_edge(u, w);
        return true;
    }

    TriangleMesh rebuild() const {
        TriangleMesh out;
        std::vector<int> remap(positions_.rows(), -1);
        int nv = 0;
        for (int v = 0; v < static_cast<int>(positions_.rows()); ++v) {
            if (alive_vertex_[v]) remap[v] = nv++;
        }
        out.vertices.resize(nv, 3);
        for (int v = 0; v < static_cast<int>(positions_.rows()); ++v) {
            if (remap[v] >= 0) out.vertices.row(remap[v]) = positions_.row(v);
        }
        out.faces.resize(live_faces_, 3);
        int nf = 0;
        for (int f = 0; f < static_cast<int>(faces_.rows()); ++f) {
            if (!alive_face_[f]) continue;
            for (int j = 0; j < 3; ++j) out.faces(nf, j) = remap[faces_(f, j)];
            ++nf;
        }
        out.validate();
        return out;
    }

    DecimationConfig cfg_;
    Eigen::MatrixXd positions_;
    Eigen::MatrixXi faces_;
    std::vector<std::uint8_t> alive_vertex_, alive_face_;
    std::vector<std::uint64_t> stamp_;
    std::vector<Quadric> quadrics_;
    std::vector<std::vector<int>> incident_;
    int live_faces_ = 0;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> heap_;
};

} // namespace

TriangleMesh decimate_quadric(const TriangleMesh& mesh, const DecimationConfig& cfg) {
    mesh.validate();
    if (cfg.target_cells < 4) {
        throw ConfigError("decimation target must be at least 4 faces");
    }
    if (cfg.target_cells > mesh.face_count()) {
        throw ValidationError("decimation target " + std::to_string(cfg.target_cells) +
                              " exceeds input face count " + std::to_string(mesh.face_count()));
    }
    if (cfg.target_cells == mesh.face_count()) {
        TriangleMesh out = mesh;
        out.vertex_labels.clear();
        return out;
    }
    Decimator dec(mesh, cfg);
    return dec.run();
}

} // namespace bmseg
