#include "bmseg/synth.hpp"

#include <algorithm>
#include <cmath>

namespace bmseg {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ToothSlot {
    int side;     // +1 right (FDI 4x), -1 left (FDI 3x)
    int position; // 1 (central incisor) .. 7 (2nd molar)
    double u;     // arch coordinate of the slot center
    double radius_u, radius_v;
    double height;
    int fdi_code() const { return (side > 0 ? 40 : 30) + position; }
    int class_id() const { return 8 - position; }
};

// incisor / canine / premolar / molar proportions by position from midline
void tooth_shape(int position, double& radius_v, double& height) {
    if (position <= 2) { radius_v = 0.20; height = 6.5; }
    else if (position == 3) { radius_v = 0.22; height = 7.0; }
    else if (position <= 5) { radius_v = 0.26; height = 6.0; }
    else { radius_v = 0.30; height = 5.5; }
}

} // namespace

TriangleMesh generate_synthetic_jaw(const SynthJawConfig& cfg) {
    if (cfg.n_teeth < 1 || cfg.n_teeth > 14) {
        throw ConfigError("synthetic jaw supports 1..14 teeth");
    }
    if (cfg.cells_target < 64) {
        throw ConfigError("synthetic jaw needs a cells_target of at least 64");
    }
    Rng rng(cfg.seed);

    // Arch geometry (mm): elliptical sweep, gum strip cross-section.
    const double arch_span = 150.0 * kPi / 180.0;
    const double arch_a = 23.0, arch_b = 28.0;
    const double strip_width = 12.0;
    const double gum_height = 4.0;

    // Fill tooth slots outward from the midline, alternating right/left.
    std::vector<ToothSlot> teeth;
    for (int i = 0; i < cfg.n_teeth; ++i) {
        ToothSlot t;
        t.position = i / 2 + 1;
        t.side = (i % 2 == 0) ? +1 : -1;
        t.u = 0.5 + t.side * (t.position - 0.5) / 14.0;
        t.radius_u = 0.75 * (0.5 / 14.0);
        tooth_shape(t.position, t.radius_v, t.height);
        t.height *= rng.uniform(0.9, 1.1);
        teeth.push_back(t);
    }

    // Grid resolution from the face budget; the strip is ~10x longer than wide.
    const int rows_v = std::max(4, static_cast<int>(std::lround(std::sqrt(cfg.cells_target / 20.0))));
    const int rows_u = std::max(8, (cfg.cells_target + 2 * rows_v - 1) / (2 * rows_v));
    const int nu = rows_u + 1, nv = rows_v + 1;

    TriangleMesh mesh;
    mesh.vertices.resize(nu * nv, 3);
    mesh.vertex_labels.assign(nu * nv, 0);
    for (int i = 0; i < nu; ++i) {
        const double u = static_cast<double>(i) / rows_u;
        const double phi = (u - 0.5) * arch_span;
        const Eigen::RowVector2d center(arch_a * std::sin(phi), arch_b * std::cos(phi));
        Eigen::RowVector2d normal(std::sin(phi) / arch_a, std::cos(phi) / arch_b);
        normal.normalize();
        for (int j = 0; j < nv; ++j) {
            const double v = static_cast<double>(j) / rows_v;
            const double w = (v - 0.5) * strip_width;
            const double ridge = std::cos(kPi * (v - 0.5));
            double z = gum_height * ridge * ridge;

            int label = 0;
            for (const ToothSlot& t : teeth) {
                const double du = (u - t.u) / t.radius_u;
                const double dv = (v - 0.5) / t.radius_v;
                const double d = std::sqrt(du * du + dv * dv);
                if (d < 1.0) {
                    const double c = std::cos(0.5 * kPi * d);
                    z += t.height * c * c;
                    if (d < 0.8) label = cfg.fdi_labels ? t.fdi_code() : t.class_id();
                }
            }

            const int row = i * nv + j;
            mesh.vertices(row, 0) = center.x() + w * normal.x() + rng.uniform(-0.03, 0.03);
            mesh.vertices(row, 1) = center.y() + w * normal.y() + rng.uniform(-0.03, 0.03);
            mesh.vertices(row, 2) = z + rng.uniform(-0.03, 0.03);
            mesh.vertex_labels[row] = label;
        }
    }

    mesh.faces.resize(2 * rows_u * rows_v, 3);
    int f = 0;
    for (int i = 0; i < rows_u; ++i) {
        for (int j = 0; j < rows_v; ++j) {
            const int a = i * nv + j;
            const int b = (i + 1) * nv + j;
            const int c = (i + 1) * nv + j + 1;
            const int d = i * nv + j + 1;
            mesh.faces.row(f++) << a, b, c;
            mesh.faces.row(f++) << a, c, d;
        }
    }
    mesh.validate();
    return mesh;
}

} // namespace bmseg
