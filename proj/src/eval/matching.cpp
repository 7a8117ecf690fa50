#include "apf/eval/matching.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "apf/core/errors.hpp"

namespace apf::eval {

double box_iou(const VoxelBox &a, const VoxelBox &b) {
  if (a.is_empty() || b.is_empty())
    throw InvalidArgument("box_iou: boxes must be non-empty");
  const std::int64_t inter = a.intersect(b).volume();
  const std::int64_t uni = a.volume() + b.volume() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

bool center_inside(const VoxelBox &inner, const VoxelBox &outer) noexcept {
  if (inner.is_empty() || outer.is_empty())
    return false;
  // doubled coordinates keep everything integral
  for (int a = 0; a < 3; ++a) {
    const std::int64_t c2 = inner.min()[a] + inner.max()[a];
    if (c2 < 2 * outer.min()[a] || c2 > 2 * outer.max()[a])
      return false;
  }
  return true;
}

namespace {

template <typename T>
void require_unique_ids(const std::vector<T> &items, const char *what) {
  std::set<std::string> seen;
  std::vector<std::string> dups;
  for (const auto &it : items)
    if (!seen.insert(it.id).second)
      dups.push_back(it.id);
  if (!dups.empty())
    throw ValidationError(fmt::format("duplicate {} ids: {}", what, fmt::join(dups, ", ")));
}

struct Candidate {
  std::size_t det;
  std::size_t gt;
  double iou;
};

} // namespace

Matching match_detections(const std::vector<Detection> &dets, const std::vector<GroundTruthBox> &gts,
                          double iou_threshold) {
  if (!std::isfinite(iou_threshold) || iou_threshold < 0.0 || iou_threshold > 1.0)
    throw InvalidArgument(fmt::format("IoU threshold must lie in [0, 1], got {}", iou_threshold));
  require_unique_ids(dets, "detection");
  require_unique_ids(gts, "ground-truth");

  std::vector<Candidate> candidates;
  for (std::size_t d = 0; d < dets.size(); ++d)
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (!center_inside(dets[d].box, gts[g].box))
        continue;
      const double iou = box_iou(dets[d].box, gts[g].box);
      if (iou >= iou_threshold)
        candidates.push_back({d, g, iou});
    }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate &x, const Candidate &y) {
    if (x.iou != y.iou)
      return x.iou > y.iou;
    if (dets[x.det].id != dets[y.det].id)
      return dets[x.det].id < dets[y.det].id;
    return gts[x.gt].id < gts[y.gt].id;
  });

  std::vector<bool> det_used(dets.size(), false);
  std::vector<bool> gt_used(gts.size(), false);
  Matching m;
  for (const Candidate &c : candidates) {
    if (det_used[c.det] || gt_used[c.gt])
      continue;
    det_used[c.det] = true;
    gt_used[c.gt] = true;
    m.pairs.push_back({dets[c.det].id, gts[c.gt].id, c.iou});
  }
  for (std::size_t d = 0; d < dets.size(); ++d)
    if (!det_used[d])
      m.fp_ids.push_back(dets[d].id);
  for (std::size_t g = 0; g < gts.size(); ++g)
    if (!gt_used[g])
      m.fn_ids.push_back(gts[g].id);
  return m;
}

} // namespace apf::eval
