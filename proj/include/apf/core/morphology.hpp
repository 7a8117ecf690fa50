#pragma once

#include "apf/core/mask.hpp"
#include "apf/core/types.hpp"

namespace apf {

/// Per-axis voxel radius covering `radius_mm`: ceil(radius_mm / spacing[i]).
/// Quotients within 1e-6 (relative) of an integer are snapped first so 3.6 mm on a
/// 0.4 mm grid gives 9, not 10. Throws InvalidArgument for negative radius.
Index3 mm_to_voxel_radius(const Vec3 &spacing_mm, double radius_mm);

/// Binary dilation with an axis-aligned box structuring element of per-axis
/// radius mm_to_voxel_radius(spacing, radius_mm), clipped at the grid
/// boundary. Runs as three separable sliding-window passes, O(n) in the
/// voxel count regardless of radius.
BinaryMask dilate_mask(const BinaryMask &mask, double radius_mm);

/// Same as dilate_mask but with an explicit voxel radius.
BinaryMask dilate_mask_voxels(const BinaryMask &mask, const Index3 &radius);

} // namespace apf
