#pragma once

#include "apf/core/affine.hpp"
#include "apf/core/box.hpp"
#include "apf/core/mask.hpp"

namespace apf::pipeline {

struct PipelineParams {
  double brain_dilation_mm = 3.6;
  double cvs_expand_mm = 3.2;
  double confidence_threshold = 0.8;
  /// Add the expanded CVS region box to the brain mask (false: the
  /// registered box before expansion).
  bool brain_uses_expanded_cvs_box = true;

  /// Throws InvalidArgument for negative/non-finite values or a threshold outside [0,1].
  void validate() const;
};

/// Derived masks for one case, all on the same grid.
struct MaskSet {
  BinaryMask brain;
  BinaryMask artery;
  BinaryMask vein_final;
  BinaryMask cvs;
  VoxelBox cvs_region_box;

  const Geometry &geometry() const noexcept { return brain.geometry(); }
};

/// Registered and expanded CVS region on the target grid: the template box
/// is transformed first, then expanded, then voxelized.
VoxelBox build_cvs_region_box(const WorldBox &template_box, const Affine4 &template_to_target, double expand_mm,
                              const Geometry &grid);

/// Vein voxels inside the region box.
BinaryMask build_cvs_mask(const VoxelBox &cvs_region_box, const BinaryMask &vein);

/// vein AND NOT cvs.
BinaryMask build_vein_final(const BinaryMask &vein, const BinaryMask &cvs);

/// Dilated brain segmentation united with the filled region box.
BinaryMask build_brain_mask(const BinaryMask &brain_seg, const VoxelBox &cvs_region_box, double dilate_mm);

/// Full construction. Inputs must share one grid (GeometryMismatch otherwise).
/// An empty region box is legal: the CVS mask is then empty and a warning is logged.
MaskSet build_mask_set(const BinaryMask &brain_seg, BinaryMask artery, const BinaryMask &vein,
                       const WorldBox &template_box, const Affine4 &template_to_target,
                       const PipelineParams &params = {});

} // namespace apf::pipeline
