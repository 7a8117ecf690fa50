#pragma once

#include <cstdint>

#include "apf/core/box.hpp"
#include "apf/core/mask.hpp"

// Reference implementations. Deliberately naive: plain nested loops with a
// bounds check per voxel, no early exits, no caching, and nothing shared
// with the fast paths they are compared against.
namespace apf::phantom {

/// Triple loop over the box, counting set voxels that fall inside the grid.
std::int64_t oracle_box_overlap(const VoxelBox &box, const BinaryMask &mask);

/// Per output voxel, scan the whole per-axis-radius neighbourhood.
/// Radius conversion uses its own ceil rule rather than mm_to_voxel_radius.
BinaryMask oracle_dilate(const BinaryMask &mask, double radius_mm);

/// Voxel loop evaluating union / intersect / subtract one voxel at a time.
BinaryMask oracle_boolean(const BinaryMask &a, const BinaryMask &b, BooleanOp op);

} // namespace apf::phantom
