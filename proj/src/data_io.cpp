#include "bmseg/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace bmseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[noreturn]] void parse_fail(const fs::path& path, const std::string& what) {
    throw IoError("failed to parse " + path.string() + ": " + what);
}

// ---------------------------------------------------------------------------
// OBJ

TriangleMesh load_obj(const fs::path& path, int* fanned_faces) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<Eigen::RowVector3d> verts;
    std::vector<Eigen::RowVector3i> tris;
    int fanned = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) parse_fail(path, "bad vertex at line " + std::to_string(lineno));
            verts.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> corners;
            std::string tok;
            while (ls >> tok) {
                // "i", "i/t", "i//n", "i/t/n" -- only the vertex index matters here.
                const std::size_t slash = tok.find('/');
                const std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                int idx = 0;
                try {
                    idx = std::stoi(head);
                } catch (const std::exception&) {
                    parse_fail(path, "bad face index '" + tok + "' at line " + std::to_string(lineno));
                }
                if (idx <= 0) {
                    parse_fail(path, "unsupported non-positive face index at line " +
                                         std::to_string(lineno));
                }
                corners.push_back(idx - 1);
            }
            if (corners.size() < 3) {
                parse_fail(path, "face with fewer than 3 corners at line " + std::to_string(lineno));
            }
            if (corners.size() > 3) ++fanned;
            for (std::size_t j = 1; j + 1 < corners.size(); ++j) {
                tris.emplace_back(corners[0], corners[j], corners[j + 1]);
            }
        }
    }
    TriangleMesh mesh;
    mesh.vertices.resize(static_cast<int>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<int>(i)) = verts[i];
    mesh.faces.resize(static_cast<int>(tris.size()), 3);
    for (std::size_t i = 0; i < tris.size(); ++i) mesh.faces.row(static_cast<int>(i)) = tris[i];
    if (fanned_faces) *fanned_faces = fanned;
    mesh.validate();
    return mesh;
}

// ---------------------------------------------------------------------------
// PLY

struct PlyProperty {
    std::string name;
    std::string type;       // scalar type, or element type for lists
    std::string count_type; // non-empty marks a list property
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

int ply_type_size(const std::string& t) {
    if (t == "char" || t == "int8" || t == "uchar" || t == "uint8") return 1;
    if (t == "short" || t == "int16" || t == "ushort" || t == "uint16") return 2;
    if (t == "int" || t == "int32" || t == "uint" || t == "uint32" || t == "float" ||
        t == "float32") return 4;
    if (t == "double" || t == "float64") return 8;
    throw IoError("unknown ply type '" + t + "'");
}

double ply_read_binary_scalar(std::istream& in, const std::string& type) {
    unsigned char buf[8];
    const int n = ply_type_size(type);
    in.read(reinterpret_cast<char*>(buf), n);
    if (!in) throw IoError("unexpected end of binary ply payload");
    auto as = [&](auto value) {
        std::memcpy(&value, buf, sizeof(value));
        return static_cast<double>(value);
    };
    if (type == "char" || type == "int8") return as(std::int8_t{});
    if (type == "uchar" || type == "uint8") return as(std::uint8_t{});
    if (type == "short" || type == "int16") return as(std::int16_t{});
    if (type == "ushort" || type == "uint16") return as(std::uint16_t{});
    if (type == "int" || type == "int32") return as(std::int32_t{});
    if (type == "uint" || type == "uint32") return as(std::uint32_t{});
    if (type == "float" || type == "float32") return as(float{});
    return as(double{});
}

TriangleMesh load_ply(const fs::path& path, int* fanned_faces) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) parse_fail(path, "missing ply magic");

    bool binary = false;
    std::vector<PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "comment" || tag == "obj_info") continue;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") binary = false;
            else if (fmt == "binary_little_endian") binary = true;
            else parse_fail(path, "unsupported ply format '" + fmt + "'");
        } else if (tag == "element") {
            PlyElement el;
            ls >> el.name >> el.count;
            elements.push_back(el);
        } else if (tag == "property") {
            if (elements.empty()) parse_fail(path, "property before element");
            PlyProperty prop;
            std::string first;
            ls >> first;
            if (first == "list") {
                ls >> prop.count_type >> prop.type >> prop.name;
            } else {
                prop.type = first;
                ls >> prop.name;
            }
            elements.back().properties.push_back(prop);
        } else if (tag == "end_header") {
            break;
        } else if (!tag.empty()) {
            parse_fail(path, "unexpected header line '" + line + "'");
        }
    }

    std::vector<Eigen::RowVector3d> verts;
    std::vector<Eigen::RowVector3i> tris;
    int fanned = 0;

    for (const PlyElement& el : elements) {
        const bool is_vertex = el.name == "vertex";
        const bool is_face = el.name == "face";
        for (std::size_t i = 0; i < el.count; ++i) {
            double x = 0, y = 0, z = 0;
            std::vector<int> corners;
            for (const PlyProperty& prop : el.properties) {
                if (!prop.count_type.empty()) {
                    double cnt = 0;
                    if (binary) {
                        cnt = ply_read_binary_scalar(in, prop.count_type);
                    } else if (!(in >> cnt)) {
                        parse_fail(path, "truncated list in element " + el.name);
                    }
                    const int n = static_cast<int>(cnt);
                    for (int j = 0; j < n; ++j) {
                        double v = 0;
                        if (binary) v = ply_read_binary_scalar(in, prop.type);
                        else if (!(in >> v)) parse_fail(path, "truncated list payload");
                        if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
                            corners.push_back(static_cast<int>(v));
                        }
                    }
                } else {
                    double v = 0;
                    if (binary) v = ply_read_binary_scalar(in, prop.type);
                    else if (!(in >> v)) parse_fail(path, "truncated element " + el.name);
                    if (is_vertex) {
                        if (prop.name == "x") x = v;
                        else if (prop.name == "y") y = v;
                        else if (prop.name == "z") z = v;
                    }
                }
            }
            if (is_vertex) verts.emplace_back(x, y, z);
            if (is_face) {
                if (corners.size() < 3) parse_fail(path, "face with fewer than 3 corners");
                if (corners.size() > 3) ++fanned;
                for (std::size_t j = 1; j + 1 < corners.size(); ++j) {
                    tris.emplace_back(corners[0], corners[j], corners[j + 1]);
                }
            }
        }
    }

    TriangleMesh mesh;
    mesh.vertices.resize(static_cast<int>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<int>(i)) = verts[i];
    mesh.faces.resize(static_cast<int>(tris.size()), 3);
    for (std::size_t i = 0; i < tris.size(); ++i) mesh.faces.row(static_cast<int>(i)) = tris[i];
    if (fanned_faces) *fanned_faces = fanned;
    mesh.validate();
    return mesh;
}

std::string lower_ext(const fs::path& path) {
    std::string e = path.extension().string();
    for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e;
}

void write_all(std::ofstream& out, const void* data, std::size_t bytes) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

} // namespace

TriangleMesh load_mesh(const fs::path& path, int* fanned_faces) {
    const std::string ext = lower_ext(path);
    if (fanned_faces) *fanned_faces = 0;
    if (ext == ".obj") return load_obj(path, fanned_faces);
    if (ext == ".ply") return load_ply(path, fanned_faces);
    throw IoError("unsupported mesh format '" + ext + "' (expected .obj or .ply)");
}

std::vector<int> load_labels(const fs::path& path) {
    const std::string text = read_text_file(path);
    // JSON first; fall back to one-label-per-line text.
    auto take_array = [&](const json& arr) {
        std::vector<int> out;
        out.reserve(arr.size());
        for (const auto& v : arr) {
            if (!v.is_number_integer()) parse_fail(path, "non-integer label entry");
            out.push_back(v.get<int>());
        }
        return out;
    };
    const json parsed = json::parse(text, nullptr, false);
    if (!parsed.is_discarded()) {
        if (parsed.is_array()) return take_array(parsed);
        if (parsed.is_object() && parsed.contains("labels") && parsed["labels"].is_array()) {
            return take_array(parsed["labels"]);
        }
        parse_fail(path, "expected a JSON label array or an object with a 'labels' array");
    }
    std::vector<int> out;
    std::istringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(std::stoi(line));
        } catch (const std::exception&) {
            parse_fail(path, "bad label at line " + std::to_string(lineno));
        }
    }
    if (out.empty()) parse_fail(path, "no labels found");
    return out;
}

TriangleMesh load_scan(const fs::path& mesh_path, const fs::path& label_path) {
    TriangleMesh mesh = load_mesh(mesh_path);
    std::vector<int> labels = load_labels(label_path);
    if (static_cast<int>(labels.size()) != mesh.vertex_count()) {
        throw ValidationError("label count " + std::to_string(labels.size()) +
                              " does not match vertex count " +
                              std::to_string(mesh.vertex_count()) + " for " + mesh_path.string());
    }
    mesh.vertex_labels = std::move(labels);
    return mesh;
}

void save_mesh_obj(const TriangleMesh& mesh, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[128];
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", mesh.vertices(v, 0),
                      mesh.vertices(v, 1), mesh.vertices(v, 2));
        out << buf;
    }
    for (int f = 0; f < mesh.face_count(); ++f) {
        out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' '
            << mesh.faces(f, 2) + 1 << '\n';
    }
}

void save_mesh_ply(const TriangleMesh& mesh, const fs::path& path, bool binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    out << "element vertex " << mesh.vertex_count() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << mesh.face_count() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";
    if (binary) {
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            double xyz[3] = {mesh.vertices(v, 0), mesh.vertices(v, 1), mesh.vertices(v, 2)};
            out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
        }
        for (int f = 0; f < mesh.face_count(); ++f) {
            const unsigned char n = 3;
            out.write(reinterpret_cast<const char*>(&n), 1);
            std::int32_t idx[3] = {mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
            out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
        }
    } else {
        char buf[128];
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", mesh.vertices(v, 0),
                          mesh.vertices(v, 1), mesh.vertices(v, 2));
            out << buf;
        }
        for (int f = 0; f < mesh.face_count(); ++f) {
            out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2)
                << '\n';
        }
    }
}

void save_labels_json(const std::vector<int>& labels, const fs::path& path) {
    json j;
    j["labels"] = labels;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump() << "\n";
}

// ---------------------------------------------------------------------------
// Taxonomy

LabelTaxonomy LabelTaxonomy::lower_jaw_fdi() {
    LabelTaxonomy t;
    t.code_to_class[0] = 0;
    for (int quadrant : {30, 40}) {
        for (int pos = 1; pos <= 7; ++pos) {
            t.code_to_class[quadrant + pos] = 8 - pos; // 31/41 -> 7 ... 37/47 -> 1
        }
    }
    return t;
}

LabelTaxonomy LabelTaxonomy::identity() {
    LabelTaxonomy t;
    for (int c = 0; c < 8; ++c) t.code_to_class[c] = c;
    return t;
}

std::vector<int> map_labels(const std::vector<int>& raw, const LabelTaxonomy& taxonomy) {
    std::vector<int> out(raw.size(), 0);
    std::vector<int> unknown;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto it = taxonomy.code_to_class.find(raw[i]);
        if (it == taxonomy.code_to_class.end()) {
            if (unknown.empty() || unknown.back() != raw[i]) unknown.push_back(raw[i]);
            continue;
        }
        out[i] = it->second;
    }
    if (!unknown.empty()) {
        std::sort(unknown.begin(), unknown.end());
        unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
        std::string codes;
        for (int c : unknown) codes += (codes.empty() ? "" : ", ") + std::to_string(c);
        throw ValidationError("unknown label codes in taxonomy: " + codes);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shards

namespace {
constexpr char kShardMagic[8] = {'B', 'M', 'S', 'S', 'H', 'R', 'D', '1'};
constexpr std::uint32_t kShardVersion = 1;
} // namespace

void save_shard(const SampleShard& shard, const fs::path& path) {
    shard.cloud.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_all(out, kShardMagic, sizeof(kShardMagic));
    const std::uint32_t version = kShardVersion;
    const std::uint32_t mode = static_cast<std::uint32_t>(shard.cloud.mode);
    const std::uint64_t n = static_cast<std::uint64_t>(shard.cloud.size());
    const std::uint64_t d = static_cast<std::uint64_t>(shard.cloud.features.cols());
    const std::uint8_t has_labels = shard.cloud.has_labels() ? 1 : 0;
    write_all(out, &version, sizeof(version));
    write_all(out, &mode, sizeof(mode));
    write_all(out, &n, sizeof(n));
    write_all(out, &d, sizeof(d));
    write_all(out, &has_labels, sizeof(has_labels));
    double rec[4] = {shard.norm.center.x(), shard.norm.center.y(), shard.norm.center.z(),
                     shard.norm.scale};
    write_all(out, rec, sizeof(rec));
    const std::uint32_t id_len = static_cast<std::uint32_t>(shard.source_id.size());
    write_all(out, &id_len, sizeof(id_len));
    write_all(out, shard.source_id.data(), id_len);
    for (int i = 0; i < shard.cloud.size(); ++i) {
        for (int j = 0; j < shard.cloud.features.cols(); ++j) {
            const double v = shard.cloud.features(i, j);
            write_all(out, &v, sizeof(v));
        }
    }
    for (int i = 0; i < shard.cloud.size(); ++i) {
        for (int j = 0; j < 3; ++j) {
            const double v = shard.cloud.barycenters(i, j);
            write_all(out, &v, sizeof(v));
        }
    }
    if (has_labels) {
        for (int lab : shard.cloud.labels) {
            const std::int32_t v = lab;
            write_all(out, &v, sizeof(v));
        }
    }
    if (!out) throw IoError("short write to " + path.string());
}

SampleShard load_shard(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kShardMagic, sizeof(magic)) != 0) {
        parse_fail(path, "bad shard magic");
    }
    auto read_pod = [&](auto& v) {
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) parse_fail(path, "truncated shard");
    };
    std::uint32_t version = 0, mode = 0;
    std::uint64_t n = 0, d = 0;
    std::uint8_t has_labels = 0;
    read_pod(version);
    if (version != kShardVersion) parse_fail(path, "unsupported shard version");
    read_pod(mode);
    read_pod(n);
    read_pod(d);
    read_pod(has_labels);
    SampleShard shard;
    shard.cloud.mode = static_cast<FeatureMode>(mode);
    if (static_cast<std::uint64_t>(feature_dim(shard.cloud.mode)) != d) {
        parse_fail(path, "shard dimension does not match mode");
    }
    double rec[4];
    in.read(reinterpret_cast<char*>(rec), sizeof(rec));
    if (!in) parse_fail(path, "truncated shard");
    shard.norm.center = Eigen::RowVector3d(rec[0], rec[1], rec[2]);
    shard.norm.scale = rec[3];
    std::uint32_t id_len = 0;
    read_pod(id_len);
    shard.source_id.resize(id_len);
    if (id_len) in.read(shard.source_id.data(), id_len);
    shard.cloud.features.resize(static_cast<int>(n), static_cast<int>(d));
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t j = 0; j < d; ++j) {
            double v;
            read_pod(v);
            shard.cloud.features(static_cast<int>(i), static_cast<int>(j)) = v;
        }
    }
    shard.cloud.barycenters.resize(static_cast<int>(n), 3);
    for (std::uint64_t i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) {
            double v;
            read_pod(v);
            shard.cloud.barycenters(static_cast<int>(i), j) = v;
        }
    }
    if (has_labels) {
        shard.cloud.labels.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            std::int32_t v;
            read_pod(v);
            shard.cloud.labels[i] = v;
        }
    }
    shard.cloud.validate();
    return shard;
}

// ---------------------------------------------------------------------------
// Manifests / indexes

DatasetManifest DatasetManifest::load(const fs::path& path) {
    const json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("samples")) {
        parse_fail(path, "expected an object with a 'samples' array");
    }
    DatasetManifest m;
    for (const auto& e : j["samples"]) {
        ManifestEntry entry;
        entry.mesh = e.at("mesh").get<std::string>();
        entry.labels = e.at("labels").get<std::string>();
        entry.split = e.value("split", "train");
        if (entry.split != "train" && entry.split != "val" && entry.split != "test") {
            parse_fail(path, "unknown split '" + entry.split + "'");
        }
        m.samples.push_back(std::move(entry));
    }
    return m;
}

void DatasetManifest::save(const fs::path& path) const {
    json j;
    j["samples"] = json::array();
    for (const auto& s : samples) {
        j["samples"].push_back({{"mesh", s.mesh}, {"labels", s.labels}, {"split", s.split}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

DatasetIndex DatasetIndex::load(const fs::path& path) {
    const json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) parse_fail(path, "expected a JSON object");
    DatasetIndex idx;
    for (const char* name : {"train", "val", "test"}) {
        if (!j.contains(name)) continue;
        for (const auto& p : j[name]) idx.split(name).push_back(p.get<std::string>());
    }
    return idx;
}

void DatasetIndex::save(const fs::path& path) const {
    json j;
    j["train"] = train;
    j["val"] = val;
    j["test"] = test;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

const std::vector<std::string>& DatasetIndex::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw ConfigError("unknown split '" + name + "'");
}

std::vector<std::string>& DatasetIndex::split(const std::string& name) {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw ConfigError("unknown split '" + name + "'");
}

fs::path default_data_dir() {
    if (const char* env = std::getenv("BMS_DATA_DIR")) return fs::path(env);
    return fs::current_path();
}

// ---------------------------------------------------------------------------
// Prediction export

std::array<std::array<std::uint8_t, 3>, 8> label_palette() {
    // BG muted gray, teeth in saturated distinct hues.
    return {{{170, 170, 170},
             {230, 60, 60},
             {245, 150, 40},
             {235, 220, 50},
             {90, 200, 70},
             {60, 200, 200},
             {70, 90, 230},
             {180, 70, 220}}};
}

void export_prediction(const TriangleMesh& mesh, const std::vector<int>& face_labels,
                       const fs::path& path_base, const NormalizationRecord* norm) {
    if (static_cast<int>(face_labels.size()) != mesh.face_count()) {
        throw ValidationError("prediction label count " + std::to_string(face_labels.size()) +
                              " does not match face count " + std::to_string(mesh.face_count()));
    }
    for (std::size_t i = 0; i < face_labels.size(); ++i) {
        if (face_labels[i] < 0 || face_labels[i] > 7) {
            throw ValidationError("prediction label outside [0..7] at face " + std::to_string(i));
        }
    }
    const auto palette = label_palette();

    // When a normalization record is supplied the mesh is in normalized
    // coordinates; everything written goes back to scanner space.
    TriangleMesh scanner = mesh;
    if (norm) {
        for (int v = 0; v < scanner.vertex_count(); ++v) {
            scanner.vertices.row(v) = norm->to_scanner(mesh.vertices.row(v));
        }
    }

    fs::path ply_path = path_base;
    ply_path += ".ply";
    std::ofstream out(ply_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + ply_path.string());
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << scanner.vertex_count() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << scanner.face_count() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    char buf[128];
    for (int v = 0; v < scanner.vertex_count(); ++v) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", scanner.vertices(v, 0),
                      scanner.vertices(v, 1), scanner.vertices(v, 2));
        out << buf;
    }
    for (int f = 0; f < scanner.face_count(); ++f) {
        const auto& rgb = palette[face_labels[f]];
        out << "3 " << scanner.faces(f, 0) << ' ' << scanner.faces(f, 1) << ' '
            << scanner.faces(f, 2) << ' ' << int(rgb[0]) << ' ' << int(rgb[1]) << ' '
            << int(rgb[2]) << '\n';
    }

    json j;
    j["labels"] = face_labels;
    {
        const Eigen::MatrixXd bary = compute_barycenters(scanner);
        json centers = json::array();
        for (int f = 0; f < scanner.face_count(); ++f) {
            centers.push_back({bary(f, 0), bary(f, 1), bary(f, 2)});
        }
        j["barycenters_scanner"] = centers;
    }
    if (norm) {
        j["normalization"] = {{"center", {norm->center.x(), norm->center.y(), norm->center.z()}},
                              {"scale", norm->scale}};
    }
    fs::path json_path = path_base;
    json_path += ".json";
    std::ofstream jout(json_path);
    if (!jout) throw IoError("cannot write " + json_path.string());
    jout << j.dump() << "\n";
}

std::vector<int> load_prediction_labels(const fs::path& json_path) {
    return load_labels(json_path);
}

} // namespace bmseg
