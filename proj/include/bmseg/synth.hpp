#pragma once

#include <cstdint>

#include "bmseg/mesh.hpp"

namespace bmseg {

struct SynthJawConfig {
    std::uint64_t seed = 1;
    int n_teeth = 14;        // 1..14, filled outward from the midline
    int cells_target = 2000; // approximate face count of the generated strip
    // Emit raw lower-jaw FDI codes (31..37 / 41..47, 0 for gum) so the full
    // taxonomy path is exercised; set false for direct class ids 0..7.
    bool fdi_labels = true;
};

// Procedural lower-jaw stand-in: a U-shaped gum strip swept along an
// elliptical arch with one smooth bump per tooth, vertex-labeled by tooth.
// Deterministic per seed. Units are mm at roughly scanner scale.
TriangleMesh generate_synthetic_jaw(const SynthJawConfig& cfg);

} // namespace bmseg
