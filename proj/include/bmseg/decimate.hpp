#pragma once

#include "bmseg/mesh.hpp"
#include "bmseg/preprocess.hpp"

namespace bmseg {

// Garland-Heckbert edge-collapse simplification down to cfg.target_cells
// faces. Collapses are ordered by a min-error heap and re-evaluated after
// each merge; collapses that would flip a surviving face normal (or create a
// degenerate/non-manifold configuration) are rejected. Interior collapses
// remove two faces, boundary collapses one, so the result lands within
// [target, target + 2] faces or the call throws with the achieved count.
//
// Vertex labels are intentionally not carried through collapses: labels are
// re-transferred from the original scan afterwards (see transfer_labels_knn).
TriangleMesh decimate_quadric(const TriangleMesh& mesh, const DecimationConfig& cfg);

} // namespace bmseg
