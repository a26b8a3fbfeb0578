#include "bmseg/preprocess.hpp"

#include <array>

#include "bmseg/knn.hpp"
#include "bmseg/metrics.hpp"

namespace bmseg {

std::vector<int> transfer_labels_knn(const Eigen::MatrixXd& source_points,
                                     const std::vector<int>& source_labels,
                                     const CellCloud& target,
                                     const LabelTransferConfig& cfg) {
    const int p = static_cast<int>(source_points.rows());
    if (p == 0) throw ValidationError("label transfer with an empty source point set");
    if (static_cast<int>(source_labels.size()) != p) {
        throw ValidationError("source label count does not match source point count");
    }
    if (cfg.k < 1) throw ConfigError("label transfer k must be >= 1");
    if (cfg.k > p) throw ValidationError("label transfer needs at least k source points");
    for (int lab : source_labels) {
        if (lab < 0 || lab >= kNumClasses) {
            throw ValidationError("source label " + std::to_string(lab) + " outside [0..7]");
        }
    }

    const PointGrid grid(source_points);
    const int n = target.size();
    std::vector<int> out(n, 0);
    for (int i = 0; i < n; ++i) {
        const auto hits = grid.query(target.barycenters.row(i), cfg.k);
        std::array<int, kNumClasses> votes{};
        for (const KnnHit& h : hits) ++votes[source_labels[h.index]];
        int best = 0;
        for (int c = 1; c < kNumClasses; ++c) {
            if (votes[c] > votes[best]) best = c; // ties keep the lowest class id
        }
        out[i] = best;
    }
    return out;
}

std::pair<CellCloud, NormalizationRecord> normalize_cloud(const CellCloud& cloud) {
    if (cloud.size() < 1) throw ValidationError("cannot normalize an empty cloud");
    NormalizationRecord rec;
    rec.center = cloud.barycenters.colwise().mean();
    const double radius =
        (cloud.barycenters.rowwise() - rec.center).rowwise().norm().maxCoeff();
    if (radius < 1e-300) {
        throw ValidationError("all barycenters coincide; normalization scale would be zero");
    }
    rec.scale = radius;

    CellCloud out = cloud;
    out.barycenters = (cloud.barycenters.rowwise() - rec.center) / rec.scale;
    for (int off : coordinate_block_offsets(cloud.mode)) {
        out.features.middleCols(off, 3) =
            (cloud.features.middleCols(off, 3).rowwise() - rec.center) / rec.scale;
    }
    return {std::move(out), rec};
}

} // namespace bmseg
