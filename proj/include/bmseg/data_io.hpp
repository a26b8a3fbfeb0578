#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "bmseg/mesh.hpp"
#include "bmseg/preprocess.hpp"

namespace bmseg {

// ---------------------------------------------------------------------------
// Meshes and label files

// OBJ or PLY (ascii / binary_little_endian), dispatched on extension.
// Quad or larger faces are fan-triangulated; the count of such faces is
// reported through *fanned_faces when non-null.
TriangleMesh load_mesh(const std::filesystem::path& path, int* fanned_faces = nullptr);

// One integer per vertex, in vertex order. Accepts a JSON object with a
// "labels" array (public-corpus convention), a bare JSON array, or plain text
// with one label per line.
std::vector<int> load_labels(const std::filesystem::path& path);

// load_mesh + load_labels with the count cross-check.
TriangleMesh load_scan(const std::filesystem::path& mesh_path,
                       const std::filesystem::path& label_path);

void save_mesh_obj(const TriangleMesh& mesh, const std::filesystem::path& path);
// binary = binary_little_endian; ascii output uses max-precision doubles so
// coordinates round-trip bit-exactly either way.
void save_mesh_ply(const TriangleMesh& mesh, const std::filesystem::path& path,
                   bool binary = true);
void save_labels_json(const std::vector<int>& labels, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Label taxonomy

// Maps raw per-vertex dataset codes to the 8 training classes. Lower-jaw FDI
// codes fold left/right homologues together: 31/41 -> 7 (central incisor)
// down to 37/47 -> 1 (2nd molar), 0 -> 0 (gingiva).
struct LabelTaxonomy {
    std::unordered_map<int, int> code_to_class;

    static LabelTaxonomy lower_jaw_fdi();
    // Pass-through for data that already carries class ids 0..7.
    static LabelTaxonomy identity();
};

std::vector<int> map_labels(const std::vector<int>& raw, const LabelTaxonomy& taxonomy);

// ---------------------------------------------------------------------------
// Dataset shards

// One preprocessed (and possibly augmented) sample, ready for the network.
struct SampleShard {
    CellCloud cloud;
    NormalizationRecord norm;
    std::string source_id;
};

// Versioned binary container: header {version, mode, N, D, flags} followed by
// raw little-endian blobs. Round-trips bit-exactly.
void save_shard(const SampleShard& shard, const std::filesystem::path& path);
SampleShard load_shard(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Manifests and split indexes

struct ManifestEntry {
    std::string mesh;
    std::string labels;
    std::string split; // train / val / test
};

struct DatasetManifest {
    std::vector<ManifestEntry> samples;

    static DatasetManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Shard paths per split, produced by preprocessing and consumed by training.
struct DatasetIndex {
    std::vector<std::string> train, val, test;

    static DatasetIndex load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    const std::vector<std::string>& split(const std::string& name) const;
    std::vector<std::string>& split(const std::string& name);
};

// Default corpus root: $BMS_DATA_DIR when set, else the current directory.
std::filesystem::path default_data_dir();

// ---------------------------------------------------------------------------
// Prediction export

std::array<std::array<std::uint8_t, 3>, 8> label_palette();

// Writes <path>.ply with per-face palette colors and <path>.json with the
// class ids (and, when a normalization record is supplied, scanner-space cell
// barycenters recovered through it).
void export_prediction(const TriangleMesh& mesh, const std::vector<int>& face_labels,
                       const std::filesystem::path& path_base,
                       const NormalizationRecord* norm = nullptr);

std::vector<int> load_prediction_labels(const std::filesystem::path& json_path);

} // namespace bmseg
