#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "apf/core/affine.hpp"
#include "apf/core/types.hpp"

namespace apf {

/// Grid description shared by volumes and masks: voxel counts, physical
/// spacing in mm and the index-to-world affine. Voxel (i,j,k) lives at
/// linear offset i + nx*(j + ny*k).
class Geometry {
public:
  Geometry(const Index3 &dims, const Vec3 &spacing_mm, const Affine4 &index_to_world);

  /// Axis-aligned grid with the given spacing and world origin at voxel (0,0,0).
  static Geometry axis_aligned(const Index3 &dims, const Vec3 &spacing_mm, const Vec3 &origin_mm = {0.0, 0.0, 0.0});

  const Index3 &dims() const noexcept { return dims_; }
  const Vec3 &spacing_mm() const noexcept { return spacing_; }
  const Affine4 &index_to_world() const noexcept { return index_to_world_; }
  const Affine4 &world_to_index() const noexcept { return world_to_index_; }

  std::size_t voxel_count() const noexcept {
    return static_cast<std::size_t>(dims_[0]) * static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(dims_[2]);
  }

  std::size_t offset(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return static_cast<std::size_t>(i + dims_[0] * (j + dims_[1] * k));
  }

  bool contains(const Index3 &idx) const noexcept {
    return idx[0] >= 0 && idx[1] >= 0 && idx[2] >= 0 && idx[0] < dims_[0] && idx[1] < dims_[1] && idx[2] < dims_[2];
  }

  /// Dims equal exactly; spacing and affine entries equal within relative 1e-4.
  bool same_grid(const Geometry &other) const noexcept;

  std::string describe() const;

private:
  Index3 dims_;
  Vec3 spacing_;
  Affine4 index_to_world_;
  Affine4 world_to_index_;
};

/// Throws GeometryMismatch naming both grids when they differ.
void require_same_grid(const Geometry &a, const Geometry &b, std::string_view context);

/// Scalar volume on a grid.
class Volume3D {
public:
  Volume3D(Geometry geometry, std::vector<float> data);

  const Geometry &geometry() const noexcept { return geometry_; }
  const std::vector<float> &data() const noexcept { return data_; }
  float at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept { return data_[geometry_.offset(i, j, k)]; }

private:
  Geometry geometry_;
  std::vector<float> data_;
};

} // namespace apf
