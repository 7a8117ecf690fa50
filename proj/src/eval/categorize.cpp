#include "apf/eval/categorize.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "apf/core/errors.hpp"

namespace apf::eval {

std::string category_name(FpCategory c) {
  switch (c) {
  case FpCategory::Extracranial:
    return "extracranial";
  case FpCategory::Venous:
    return "venous";
  case FpCategory::Cvs:
    return "cvs";
  case FpCategory::Arterial:
    return "arterial";
  case FpCategory::Nonvascular:
    return "nonvascular";
  }
  return "unknown";
}

FpCategory parse_category(std::string_view name) {
  for (FpCategory c : kAllCategories)
    if (category_name(c) == name)
      return c;
  throw InvalidArgument(fmt::format("unknown FP category '{}'", name));
}

FpCategory categorize_profile(const filter::OverlapProfile &p) noexcept {
  if (p.brain == 0)
    return FpCategory::Extracranial;
  if (p.cvs >= 1 && p.cvs >= std::max(p.vein, p.artery))
    return FpCategory::Cvs;
  if (p.vein > p.artery)
    return FpCategory::Venous;
  if (p.artery >= 1)
    return FpCategory::Arterial;
  return FpCategory::Nonvascular;
}

FpCategory categorize_fp(const VoxelBox &box, const pipeline::MaskSet &masks) {
  return categorize_profile(filter::overlap_profile(box, masks));
}

} // namespace apf::eval
