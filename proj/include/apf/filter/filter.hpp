#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apf/filter/detection.hpp"
#include "apf/pipeline/mask_pipeline.hpp"

namespace apf::filter {

/// Voxel counts of a box against each derived mask. `vein` is the
/// CVS-subtracted vein mask.
struct OverlapProfile {
  std::int64_t brain = 0;
  std::int64_t artery = 0;
  std::int64_t vein = 0;
  std::int64_t cvs = 0;
  std::int64_t box_volume = 0;

  bool operator==(const OverlapProfile &) const = default;
};

/// Post-processing methods:
///   M1 removes boxes with no brain overlap,
///   M2 removes boxes touching the vein mask,
///   M3 removes boxes overlapping vein more than artery,
///   M4 = M1 or M2, M5 = M1 or M3.
enum class Method { M1 = 1, M2 = 2, M3 = 3, M4 = 4, M5 = 5 };

inline constexpr Method kAllMethods[] = {Method::M1, Method::M2, Method::M3, Method::M4, Method::M5};

int method_number(Method m) noexcept;
/// Accepts "1".."5", "M1".."M5" (case-insensitive). Throws InvalidArgument otherwise.
Method parse_method(std::string_view text);
std::string method_name(Method m);

struct FilterOptions {
  /// Minimum vein voxels for the M2 rule. The only reading of "any overlap" is 1.
  std::int64_t m2_min_voxels = 1;
};

struct Decision {
  bool remove = false;
  std::string reason;
};

struct RemovedDetection {
  Detection detection;
  OverlapProfile profile;
  std::string reason;
};

/// Per-input record, in input order; this is what the removal log persists.
struct DecisionRecord {
  std::string detection_id;
  bool removed = false;
  std::string reason;
  OverlapProfile profile;
};

struct FilterResult {
  Method method = Method::M1;
  std::vector<Detection> kept;
  std::vector<RemovedDetection> removed;
  std::vector<DecisionRecord> records;
};

/// Keep detections with confidence >= tau, order preserved.
std::vector<Detection> threshold_detections(const std::vector<Detection> &dets, double tau);

OverlapProfile overlap_profile(const VoxelBox &box, const pipeline::MaskSet &masks);

Decision decide_removal(const OverlapProfile &p, Method m, const FilterOptions &options = {});

FilterResult apply_method(const std::vector<Detection> &dets, const pipeline::MaskSet &masks, Method m,
                          const FilterOptions &options = {});

} // namespace apf::filter
