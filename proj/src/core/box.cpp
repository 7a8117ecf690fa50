#include "apf/core/box.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "apf/core/errors.hpp"

namespace apf {

VoxelBox::VoxelBox(const Index3 &min, const Index3 &max) : min_(min), max_(max) {
  if (min_[0] >= max_[0] || min_[1] >= max_[1] || min_[2] >= max_[2]) {
    min_ = {0, 0, 0};
    max_ = {0, 0, 0};
  }
}

bool VoxelBox::contains(const Index3 &idx) const noexcept {
  for (int a = 0; a < 3; ++a)
    if (idx[a] < min_[a] || idx[a] >= max_[a])
      return false;
  return true;
}

bool VoxelBox::contains(const VoxelBox &other) const noexcept {
  if (other.is_empty())
    return true;
  for (int a = 0; a < 3; ++a)
    if (other.min_[a] < min_[a] || other.max_[a] > max_[a])
      return false;
  return true;
}

VoxelBox VoxelBox::intersect(const VoxelBox &other) const noexcept {
  if (is_empty() || other.is_empty())
    return {};
  Index3 lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(min_[a], other.min_[a]);
    hi[a] = std::min(max_[a], other.max_[a]);
  }
  return {lo, hi};
}

VoxelBox VoxelBox::translated(const Index3 &delta) const noexcept {
  if (is_empty())
    return {};
  return {{min_[0] + delta[0], min_[1] + delta[1], min_[2] + delta[2]},
          {max_[0] + delta[0], max_[1] + delta[1], max_[2] + delta[2]}};
}

VoxelBox VoxelBox::dilated(const Index3 &r) const noexcept {
  if (is_empty())
    return {};
  return {{min_[0] - r[0], min_[1] - r[1], min_[2] - r[2]}, {max_[0] + r[0], max_[1] + r[1], max_[2] + r[2]}};
}

std::string VoxelBox::to_string() const {
  if (is_empty())
    return "VoxelBox(empty)";
  return fmt::format("VoxelBox([{}, {}, {}) .. [{}, {}, {}))", min_[0], min_[1], min_[2], max_[0], max_[1], max_[2]);
}

std::ostream &operator<<(std::ostream &os, const VoxelBox &box) { return os << box.to_string(); }

WorldBox::WorldBox(const Vec3 &min_mm, const Vec3 &max_mm) : min_(min_mm), max_(max_mm) {
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(min_[a]) || !std::isfinite(max_[a]))
      throw InvalidArgument("world box corners must be finite");
    if (min_[a] > max_[a])
      throw InvalidArgument(fmt::format("world box min {} exceeds max {} on axis {}", min_[a], max_[a], a));
  }
}

double WorldBox::volume_mm3() const noexcept {
  return (max_[0] - min_[0]) * (max_[1] - min_[1]) * (max_[2] - min_[2]);
}

namespace {

template <typename Fn>
void for_each_corner(const Vec3 &lo, const Vec3 &hi, Fn &&fn) {
  for (int c = 0; c < 8; ++c)
    fn(Vec3{(c & 1) ? hi[0] : lo[0], (c & 2) ? hi[1] : lo[1], (c & 4) ? hi[2] : lo[2]});
}

std::pair<Vec3, Vec3> transformed_aabb(const Affine4 &t, const Vec3 &lo, const Vec3 &hi) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Vec3 out_lo{inf, inf, inf};
  Vec3 out_hi{-inf, -inf, -inf};
  for_each_corner(lo, hi, [&](const Vec3 &p) {
    const Vec3 q = t.apply(p);
    for (int a = 0; a < 3; ++a) {
      out_lo[a] = std::min(out_lo[a], q[a]);
      out_hi[a] = std::max(out_hi[a], q[a]);
    }
  });
  return {out_lo, out_hi};
}

} // namespace

WorldBox transform_world_box(const Affine4 &t, const WorldBox &box) {
  auto [lo, hi] = transformed_aabb(t, box.min_mm(), box.max_mm());
  return {lo, hi};
}

WorldBox expand_world_box(const WorldBox &box, double margin_mm) {
  if (!(margin_mm >= 0.0) || !std::isfinite(margin_mm))
    throw InvalidArgument(fmt::format("box expansion margin must be >= 0, got {}", margin_mm));
  Vec3 lo = box.min_mm();
  Vec3 hi = box.max_mm();
  for (int a = 0; a < 3; ++a) {
    lo[a] -= margin_mm;
    hi[a] += margin_mm;
  }
  return {lo, hi};
}

VoxelBox voxelize_world_box(const WorldBox &box, const Geometry &grid) {
  auto [lo, hi] = transformed_aabb(grid.world_to_index(), box.min_mm(), box.max_mm());
  Index3 vmin{}, vmax{};
  const Index3 &dims = grid.dims();
  for (int a = 0; a < 3; ++a) {
    // Clamp in floating point first so absurd coordinates cannot overflow int64.
    const double lim = static_cast<double>(dims[a]) + 1.0;
    const double cmin = std::clamp(snap_to_integer(lo[a], 1e-6), -1.0, lim);
    const double cmax = std::clamp(snap_to_integer(hi[a], 1e-6), -2.0, lim);
    vmin[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(cmin)));
    vmax[a] = std::min<std::int64_t>(dims[a], static_cast<std::int64_t>(std::floor(cmax)) + 1);
  }
  return {vmin, vmax};
}

WorldBox voxel_box_to_world(const VoxelBox &box, const Geometry &grid) {
  if (box.is_empty())
    throw InvalidArgument("cannot map an empty voxel box to world space");
  Vec3 lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<double>(box.min()[a]);
    hi[a] = static_cast<double>(box.max()[a]);
  }
  auto [wlo, whi] = transformed_aabb(grid.index_to_world(), lo, hi);
  return {wlo, whi};
}

} // namespace apf
