#pragma once

#include <string>
#include <vector>

#include "apf/core/box.hpp"
#include "apf/filter/detection.hpp"

namespace apf::eval {

/// Intersection over union by voxel count. Throws InvalidArgument for empty boxes.
double box_iou(const VoxelBox &a, const VoxelBox &b);

/// True when the centre of `inner` lies inside `outer` (boundary inclusive),
/// treating both as continuous boxes from corner min to corner max.
bool center_inside(const VoxelBox &inner, const VoxelBox &outer) noexcept;

struct MatchPair {
  std::string detection_id;
  std::string ground_truth_id;
  double iou = 0.0;

  bool operator==(const MatchPair &) const = default;
};

struct Matching {
  std::vector<MatchPair> pairs;       // in assignment order (descending IoU)
  std::vector<std::string> fp_ids;    // detection input order
  std::vector<std::string> fn_ids;    // ground-truth input order

  std::size_t tp() const noexcept { return pairs.size(); }
  std::size_t fp() const noexcept { return fp_ids.size(); }
  std::size_t fn() const noexcept { return fn_ids.size(); }
};

inline constexpr double kDefaultIouThreshold = 0.3;

/// One-to-one greedy matching. A pair is admissible when the detection
/// centre lies in the ground-truth box and IoU >= iou_threshold; admissible
/// pairs are taken in descending IoU (ties: detection id, then ground-truth
/// id, lexicographically). Throws ValidationError on duplicate ids and
/// InvalidArgument on a threshold outside [0, 1].
Matching match_detections(const std::vector<Detection> &dets, const std::vector<GroundTruthBox> &gts,
                          double iou_threshold = kDefaultIouThreshold);

} // namespace apf::eval
