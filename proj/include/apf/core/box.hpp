#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "apf/core/affine.hpp"
#include "apf/core/geometry.hpp"
#include "apf/core/types.hpp"

namespace apf {

/// Integer box in voxel index space, min inclusive and max exclusive.
/// Any box with min[i] >= max[i] on some axis collapses to the canonical
/// empty box, so all empty boxes compare equal.
class VoxelBox {
public:
  VoxelBox() = default;
  VoxelBox(const Index3 &min, const Index3 &max);

  static VoxelBox empty() { return {}; }
  /// Box covering every voxel of a grid.
  static VoxelBox full(const Index3 &dims) { return {{0, 0, 0}, dims}; }

  const Index3 &min() const noexcept { return min_; }
  const Index3 &max() const noexcept { return max_; }

  bool is_empty() const noexcept { return min_[0] >= max_[0]; }
  std::int64_t extent(int axis) const noexcept { return is_empty() ? 0 : max_[axis] - min_[axis]; }
  std::int64_t volume() const noexcept { return extent(0) * extent(1) * extent(2); }

  bool contains(const Index3 &idx) const noexcept;
  bool contains(const VoxelBox &other) const noexcept;

  VoxelBox intersect(const VoxelBox &other) const noexcept;
  VoxelBox clipped(const Index3 &dims) const noexcept { return intersect(full(dims)); }
  VoxelBox translated(const Index3 &delta) const noexcept;
  /// Grow by `r[i]` voxels on both sides of each axis (no clipping).
  VoxelBox dilated(const Index3 &r) const noexcept;

  bool operator==(const VoxelBox &) const noexcept = default;

  std::string to_string() const;

private:
  Index3 min_{0, 0, 0};
  Index3 max_{0, 0, 0};
};

std::ostream &operator<<(std::ostream &os, const VoxelBox &box);

/// Axis-aligned box in world millimetres (closed).
class WorldBox {
public:
  /// Throws InvalidArgument unless min_mm[i] <= max_mm[i] on every axis.
  WorldBox(const Vec3 &min_mm, const Vec3 &max_mm);

  const Vec3 &min_mm() const noexcept { return min_; }
  const Vec3 &max_mm() const noexcept { return max_; }
  double volume_mm3() const noexcept;

  bool operator==(const WorldBox &) const noexcept = default;

private:
  Vec3 min_;
  Vec3 max_;
};

/// Axis-aligned bounding box of the 8 transformed corners.
WorldBox transform_world_box(const Affine4 &t, const WorldBox &box);

/// Grow by `margin_mm` on every side. Throws InvalidArgument for negative margins.
WorldBox expand_world_box(const WorldBox &box, double margin_mm);

/// Map a world box onto a grid: corners go through the inverse affine, the
/// index-space AABB is rounded outward to whole voxels (min = floor, last
/// contained index = floor of the max) and clipped to the grid. Returns the
/// empty box when nothing remains.
VoxelBox voxelize_world_box(const WorldBox &box, const Geometry &grid);

/// World-space AABB of a voxel box, spanning corner index min to corner index max.
WorldBox voxel_box_to_world(const VoxelBox &box, const Geometry &grid);

} // namespace apf
