#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "apf/core/box.hpp"
#include "apf/core/geometry.hpp"

namespace apf {

/// Boolean occupancy on a grid, one byte per voxel (0 or 1).
class BinaryMask {
public:
  /// All-false mask.
  explicit BinaryMask(Geometry geometry);
  /// Throws InvalidArgument when the occupancy length differs from the grid volume.
  BinaryMask(Geometry geometry, std::vector<std::uint8_t> occupancy);

  /// Voxel set iff value > 0.5.
  static BinaryMask from_volume(const Volume3D &volume);

  const Geometry &geometry() const noexcept { return geometry_; }
  std::span<const std::uint8_t> occupancy() const noexcept { return occupancy_; }
  std::span<std::uint8_t> occupancy() noexcept { return occupancy_; }

  bool at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return occupancy_[geometry_.offset(i, j, k)] != 0;
  }
  void set(std::int64_t i, std::int64_t j, std::int64_t k, bool value = true) noexcept {
    occupancy_[geometry_.offset(i, j, k)] = value ? 1 : 0;
  }

  /// Set every voxel of `box` (clipped to the grid).
  void fill_box(const VoxelBox &box, bool value = true);

  std::size_t popcount() const noexcept;
  bool empty() const noexcept { return popcount() == 0; }

  /// Same grid and identical occupancy.
  bool operator==(const BinaryMask &other) const noexcept;

private:
  Geometry geometry_;
  std::vector<std::uint8_t> occupancy_;
};

enum class BooleanOp { Union, Intersect, Subtract };

/// Voxelwise a op b. Throws GeometryMismatch when the grids differ.
BinaryMask mask_boolean(const BinaryMask &a, const BinaryMask &b, BooleanOp op);

/// True iff every voxel set in `inner` is set in `outer`.
bool is_subset(const BinaryMask &inner, const BinaryMask &outer);

} // namespace apf
