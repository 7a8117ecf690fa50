#pragma once

#include <string>
#include <vector>

#include "apf/core/box.hpp"

namespace apf {

/// One model output: a voxel box with a confidence in [0, 1].
struct Detection {
  std::string id;
  VoxelBox box;
  double confidence = 1.0;

  bool operator==(const Detection &) const = default;
};

/// Annotated aneurysm.
struct GroundTruthBox {
  std::string id;
  VoxelBox box;

  bool operator==(const GroundTruthBox &) const = default;
};

} // namespace apf
