#include "apf/core/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "apf/core/errors.hpp"

namespace apf {

namespace {

constexpr double kGridRelTol = 1e-4;

bool close_rel(double a, double b) {
  return std::abs(a - b) <= kGridRelTol * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace

Geometry::Geometry(const Index3 &dims, const Vec3 &spacing_mm, const Affine4 &index_to_world)
    : dims_(dims), spacing_(spacing_mm), index_to_world_(index_to_world), world_to_index_(index_to_world.inverse()) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] < 1)
      throw InvalidArgument(fmt::format("grid dimension {} must be >= 1, got {}", a, dims_[a]));
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a]))
      throw InvalidArgument(fmt::format("grid spacing {} must be positive, got {}", a, spacing_[a]));
  }
}

Geometry Geometry::axis_aligned(const Index3 &dims, const Vec3 &spacing_mm, const Vec3 &origin_mm) {
  for (int a = 0; a < 3; ++a)
    if (!(spacing_mm[a] > 0.0) || !std::isfinite(spacing_mm[a]))
      throw InvalidArgument(fmt::format("grid spacing {} must be positive, got {}", a, spacing_mm[a]));
  return Geometry(dims, spacing_mm, Affine4::scaling(spacing_mm, origin_mm));
}

bool Geometry::same_grid(const Geometry &other) const noexcept {
  if (dims_ != other.dims_)
    return false;
  for (int a = 0; a < 3; ++a)
    if (!close_rel(spacing_[a], other.spacing_[a]))
      return false;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!close_rel(index_to_world_(r, c), other.index_to_world_(r, c)))
        return false;
  return true;
}

std::string Geometry::describe() const {
  return fmt::format("grid {}x{}x{} spacing ({}, {}, {}) affine {}", dims_[0], dims_[1], dims_[2], spacing_[0],
                     spacing_[1], spacing_[2], index_to_world_.to_string());
}

void require_same_grid(const Geometry &a, const Geometry &b, std::string_view context) {
  if (!a.same_grid(b))
    throw GeometryMismatch(fmt::format("{}: geometry mismatch between {} and {}", context, a.describe(), b.describe()));
}

Volume3D::Volume3D(Geometry geometry, std::vector<float> data) : geometry_(std::move(geometry)), data_(std::move(data)) {
  if (data_.size() != geometry_.voxel_count())
    throw InvalidArgument(
        fmt::format("volume data has {} values, grid needs {}", data_.size(), geometry_.voxel_count()));
}

} // namespace apf
