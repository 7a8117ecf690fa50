#include "apf/filter/filter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "apf/core/errors.hpp"
#include "apf/core/overlap.hpp"

namespace apf::filter {

int method_number(Method m) noexcept { return static_cast<int>(m); }

std::string method_name(Method m) { return fmt::format("M{}", method_number(m)); }

Method parse_method(std::string_view text) {
  std::string_view t = text;
  if (!t.empty() && (t.front() == 'M' || t.front() == 'm'))
    t.remove_prefix(1);
  if (t.size() == 1 && t[0] >= '1' && t[0] <= '5')
    return static_cast<Method>(t[0] - '0');
  throw InvalidArgument(fmt::format("unknown method '{}' (expected 1-5)", text));
}

std::vector<Detection> threshold_detections(const std::vector<Detection> &dets, double tau) {
  if (!std::isfinite(tau) || tau < 0.0 || tau > 1.0)
    throw InvalidArgument(fmt::format("confidence threshold must lie in [0, 1], got {}", tau));
  std::vector<Detection> kept;
  std::copy_if(dets.begin(), dets.end(), std::back_inserter(kept),
               [tau](const Detection &d) { return d.confidence >= tau; });
  return kept;
}

OverlapProfile overlap_profile(const VoxelBox &box, const pipeline::MaskSet &masks) {
  return OverlapProfile{
      .brain = box_mask_overlap(box, masks.brain),
      .artery = box_mask_overlap(box, masks.artery),
      .vein = box_mask_overlap(box, masks.vein_final),
      .cvs = box_mask_overlap(box, masks.cvs),
      .box_volume = box.clipped(masks.geometry().dims()).volume(),
  };
}

namespace {

std::optional<std::string> brain_rule(const OverlapProfile &p) {
  if (p.brain == 0)
    return std::string("M1:brain_overlap=0");
  return std::nullopt;
}

std::optional<std::string> vein_any_rule(const OverlapProfile &p, const FilterOptions &o) {
  if (p.vein >= o.m2_min_voxels)
    return fmt::format("M2:vein_overlap={}>={}", p.vein, o.m2_min_voxels);
  return std::nullopt;
}

std::optional<std::string> vein_dominant_rule(const OverlapProfile &p) {
  if (p.vein > p.artery)
    return fmt::format("M3:vein_overlap={}>artery_overlap={}", p.vein, p.artery);
  return std::nullopt;
}

Decision combine(std::initializer_list<std::optional<std::string>> hits) {
  Decision d;
  for (const auto &h : hits) {
    if (!h)
      continue;
    if (d.remove)
      d.reason += ';';
    d.reason += *h;
    d.remove = true;
  }
  if (!d.remove)
    d.reason = "kept";
  return d;
}

} // namespace

Decision decide_removal(const OverlapProfile &p, Method m, const FilterOptions &options) {
  if (options.m2_min_voxels < 1)
    throw InvalidArgument(fmt::format("m2_min_voxels must be >= 1, got {}", options.m2_min_voxels));
  switch (m) {
  case Method::M1:
    return combine({brain_rule(p)});
  case Method::M2:
    return combine({vein_any_rule(p, options)});
  case Method::M3:
    return combine({vein_dominant_rule(p)});
  case Method::M4:
    return combine({brain_rule(p), vein_any_rule(p, options)});
  case Method::M5:
    return combine({brain_rule(p), vein_dominant_rule(p)});
  }
  throw InvalidArgument("unknown method");
}

FilterResult apply_method(const std::vector<Detection> &dets, const pipeline::MaskSet &masks, Method m,
                          const FilterOptions &options) {
  FilterResult result;
  result.method = m;
  result.records.reserve(dets.size());
  for (const Detection &det : dets) {
    const OverlapProfile profile = overlap_profile(det.box, masks);
    Decision decision = decide_removal(profile, m, options);
    result.records.push_back({det.id, decision.remove, decision.reason, profile});
    if (decision.remove)
      result.removed.push_back({det, profile, std::move(decision.reason)});
    else
      result.kept.push_back(det);
  }
  return result;
}

} // namespace apf::filter
