#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace bmseg {

struct KnnHit {
    double d2 = 0.0; // squared Euclidean distance
    int index = -1;
};

// Exhaustive scan, ties broken by index. The reference answer for everything
// grid-accelerated.
std::vector<KnnHit> knn_brute_force(const Eigen::RowVector3d& query,
                                    const Eigen::MatrixXd& points, int k);

// Uniform hash-grid index over a fixed point set. Queries are exact: the
// shell expansion only stops once no unscanned cell can hold a closer point
// than the current k-th best, and equal distances fall back to the same
// (d2, index) ordering the brute-force scan uses.
class PointGrid {
public:
    explicit PointGrid(const Eigen::MatrixXd& points);

    std::vector<KnnHit> query(const Eigen::RowVector3d& q, int k) const;

    int size() const { return static_cast<int>(points_.rows()); }

private:
    struct CellKey {
        std::int64_t x, y, z;
        bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
    };
    struct CellHash {
        std::size_t operator()(const CellKey& c) const {
            std::uint64_t h = static_cast<std::uint64_t>(c.x) * 0x9e3779b97f4a7c15ull;
            h ^= static_cast<std::uint64_t>(c.y) * 0xc2b2ae3d27d4eb4full;
            h ^= static_cast<std::uint64_t>(c.z) * 0x165667b19e3779f9ull;
            return static_cast<std::size_t>(h ^ (h >> 29));
        }
    };

    CellKey cell_of(const Eigen::RowVector3d& p) const;

    Eigen::MatrixXd points_;
    double cell_size_ = 1.0;
    bool degenerate_ = false; // all points coincident; brute force instead
    CellKey cell_lo_{0, 0, 0};
    CellKey cell_hi_{0, 0, 0};
    std::unordered_map<CellKey, std::vector<int>, CellHash> cells_;
};

} // namespace bmseg
