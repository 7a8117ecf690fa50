#pragma once

#include <string>
#include <string_view>

#include "apf/core/box.hpp"
#include "apf/filter/filter.hpp"
#include "apf/pipeline/mask_pipeline.hpp"

namespace apf::eval {

enum class FpCategory { Extracranial, Venous, Cvs, Arterial, Nonvascular };

inline constexpr FpCategory kAllCategories[] = {FpCategory::Extracranial, FpCategory::Venous, FpCategory::Cvs,
                                                FpCategory::Arterial, FpCategory::Nonvascular};

std::string category_name(FpCategory c);
/// Throws InvalidArgument for unknown names.
FpCategory parse_category(std::string_view name);
inline bool is_intracranial(FpCategory c) noexcept { return c != FpCategory::Extracranial; }

/// First matching rule wins:
///   brain == 0                           -> extracranial
///   cvs >= 1 and cvs >= max(vein, artery) -> cvs
///   vein > artery                        -> venous
///   artery >= 1                          -> arterial
///   otherwise                            -> nonvascular
FpCategory categorize_profile(const filter::OverlapProfile &p) noexcept;

FpCategory categorize_fp(const VoxelBox &box, const pipeline::MaskSet &masks);

} // namespace apf::eval
