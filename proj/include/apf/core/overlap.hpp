#pragma once

#include <cstdint>

#include "apf/core/box.hpp"
#include "apf/core/mask.hpp"

namespace apf {

/// Number of set mask voxels whose index lies in [box.min, box.max).
/// Parts of the box outside the grid count as zero.
std::int64_t box_mask_overlap(const VoxelBox &box, const BinaryMask &mask);

} // namespace apf
