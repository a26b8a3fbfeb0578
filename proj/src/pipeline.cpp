#include "bmseg/pipeline.hpp"

namespace bmseg {

SampleShard preprocess_scan(const TriangleMesh& scan, const LabelTaxonomy& taxonomy,
                            const PreprocessConfig& cfg, const std::string& source_id) {
    if (!scan.has_labels()) {
        throw ValidationError("preprocess_scan needs a labeled scan (" + source_id + ")");
    }
    const std::vector<int> classes = map_labels(scan.vertex_labels, taxonomy);

    const TriangleMesh decimated = decimate_quadric(scan, cfg.decimate);
    CellCloud cloud = build_cell_features(decimated, cfg.mode, cfg.features);
    cloud.labels = transfer_labels_knn(scan.vertices, classes, cloud, cfg.transfer);

    SampleShard shard;
    if (cfg.normalize) {
        auto [normalized, record] = normalize_cloud(cloud);
        shard.cloud = std::move(normalized);
        shard.norm = record;
    } else {
        shard.cloud = std::move(cloud);
    }
    shard.source_id = source_id;
    shard.cloud.validate();
    return shard;
}

InferenceInput preprocess_for_inference(const TriangleMesh& scan, const PreprocessConfig& cfg,
                                        const std::string& source_id) {
    TriangleMesh unlabeled = scan;
    unlabeled.vertex_labels.clear();
    InferenceInput input;
    input.decimated = decimate_quadric(unlabeled, cfg.decimate);
    CellCloud cloud = build_cell_features(input.decimated, cfg.mode, cfg.features);
    if (cfg.normalize) {
        auto [normalized, record] = normalize_cloud(cloud);
        input.shard.cloud = std::move(normalized);
        input.shard.norm = record;
    } else {
        input.shard.cloud = std::move(cloud);
    }
    input.shard.source_id = source_id;
    return input;
}

} // namespace bmseg
