#pragma once

#include <string>

#include "bmseg/data_io.hpp"
#include "bmseg/decimate.hpp"
#include "bmseg/mesh.hpp"
#include "bmseg/preprocess.hpp"

namespace bmseg {

struct PreprocessConfig {
    DecimationConfig decimate;
    LabelTransferConfig transfer;
    FeatureMode mode = FeatureMode::BVN24;
    CellFeatureOptions features;
    bool normalize = true;
};

// Raw labeled scan -> network-ready sample: map raw codes through the
// taxonomy, decimate to the target cell count, build per-cell features,
// transfer labels from the ORIGINAL vertices onto the decimated barycenters,
// then unit-sphere normalize (keeping the inverse record).
SampleShard preprocess_scan(const TriangleMesh& scan, const LabelTaxonomy& taxonomy,
                            const PreprocessConfig& cfg, const std::string& source_id);

// Same pipeline without labels, for inference on unlabeled scans. Returns the
// shard plus the decimated scanner-space mesh (for prediction export).
struct InferenceInput {
    SampleShard shard;
    TriangleMesh decimated;
};
InferenceInput preprocess_for_inference(const TriangleMesh& scan, const PreprocessConfig& cfg,
                                        const std::string& source_id);

} // namespace bmseg
