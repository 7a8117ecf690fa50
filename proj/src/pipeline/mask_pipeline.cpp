#include "apf/pipeline/mask_pipeline.hpp"

#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "apf/core/errors.hpp"
#include "apf/core/morphology.hpp"

namespace apf::pipeline {

void PipelineParams::validate() const {
  auto nonneg = [](double v, const char *name) {
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidArgument(fmt::format("{} must be a finite value >= 0, got {}", name, v));
  };
  nonneg(brain_dilation_mm, "brain_dilation_mm");
  nonneg(cvs_expand_mm, "cvs_expand_mm");
  if (!std::isfinite(confidence_threshold) || confidence_threshold < 0.0 || confidence_threshold > 1.0)
    throw InvalidArgument(fmt::format("confidence_threshold must lie in [0, 1], got {}", confidence_threshold));
}

VoxelBox build_cvs_region_box(const WorldBox &template_box, const Affine4 &template_to_target, double expand_mm,
                              const Geometry &grid) {
  const WorldBox registered = transform_world_box(template_to_target, template_box);
  return voxelize_world_box(expand_world_box(registered, expand_mm), grid);
}

BinaryMask build_cvs_mask(const VoxelBox &cvs_region_box, const BinaryMask &vein) {
  BinaryMask cvs(vein.geometry());
  const VoxelBox b = cvs_region_box.clipped(vein.geometry().dims());
  if (b.is_empty())
    return cvs;
  const Geometry &g = vein.geometry();
  const auto src = vein.occupancy();
  auto dst = cvs.occupancy();
  for (std::int64_t k = b.min()[2]; k < b.max()[2]; ++k)
    for (std::int64_t j = b.min()[1]; j < b.max()[1]; ++j) {
      const std::size_t start = g.offset(b.min()[0], j, k);
      for (std::int64_t i = 0; i < b.extent(0); ++i)
        dst[start + i] = src[start + i];
    }
  return cvs;
}

BinaryMask build_vein_final(const BinaryMask &vein, const BinaryMask &cvs) {
  return mask_boolean(vein, cvs, BooleanOp::Subtract);
}

BinaryMask build_brain_mask(const BinaryMask &brain_seg, const VoxelBox &cvs_region_box, double dilate_mm) {
  BinaryMask brain = dilate_mask(brain_seg, dilate_mm);
  brain.fill_box(cvs_region_box);
  return brain;
}

MaskSet build_mask_set(const BinaryMask &brain_seg, BinaryMask artery, const BinaryMask &vein,
                       const WorldBox &template_box, const Affine4 &template_to_target, const PipelineParams &params) {
  params.validate();
  const Geometry &grid = vein.geometry();
  require_same_grid(brain_seg.geometry(), grid, "build_mask_set (brain_seg vs vein)");
  require_same_grid(artery.geometry(), grid, "build_mask_set (artery vs vein)");

  const VoxelBox region = build_cvs_region_box(template_box, template_to_target, params.cvs_expand_mm, grid);
  if (region.is_empty())
    spdlog::warn("CVS region box maps outside the grid; CVS mask will be empty");

  VoxelBox brain_box = region;
  if (!params.brain_uses_expanded_cvs_box)
    brain_box = build_cvs_region_box(template_box, template_to_target, 0.0, grid);

  BinaryMask cvs = build_cvs_mask(region, vein);
  BinaryMask vein_final = build_vein_final(vein, cvs);
  BinaryMask brain = build_brain_mask(brain_seg, brain_box, params.brain_dilation_mm);
  if (spdlog::should_log(spdlog::level::debug))
    spdlog::debug("mask set: region {} brain {} vein_final {} cvs {}", region.to_string(), brain.popcount(),
                  vein_final.popcount(), cvs.popcount());
  return MaskSet{std::move(brain), std::move(artery), std::move(vein_final), std::move(cvs), region};
}

} // namespace apf::pipeline
