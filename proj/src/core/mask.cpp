#include "apf/core/mask.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "apf/core/errors.hpp"

namespace apf {

BinaryMask::BinaryMask(Geometry geometry)
    : geometry_(std::move(geometry)), occupancy_(geometry_.voxel_count(), std::uint8_t{0}) {}

BinaryMask::BinaryMask(Geometry geometry, std::vector<std::uint8_t> occupancy)
    : geometry_(std::move(geometry)), occupancy_(std::move(occupancy)) {
  if (occupancy_.size() != geometry_.voxel_count())
    throw InvalidArgument(
        fmt::format("mask has {} voxels, grid needs {}", occupancy_.size(), geometry_.voxel_count()));
  for (auto &v : occupancy_)
    v = v != 0 ? 1 : 0;
}

BinaryMask BinaryMask::from_volume(const Volume3D &volume) {
  std::vector<std::uint8_t> occ(volume.data().size());
  std::transform(volume.data().begin(), volume.data().end(), occ.begin(),
                 [](float v) { return static_cast<std::uint8_t>(v > 0.5f); });
  return {volume.geometry(), std::move(occ)};
}

void BinaryMask::fill_box(const VoxelBox &box, bool value) {
  const VoxelBox b = box.clipped(geometry_.dims());
  if (b.is_empty())
    return;
  const std::uint8_t v = value ? 1 : 0;
  for (std::int64_t k = b.min()[2]; k < b.max()[2]; ++k)
    for (std::int64_t j = b.min()[1]; j < b.max()[1]; ++j) {
      auto row = occupancy_.begin() + static_cast<std::ptrdiff_t>(geometry_.offset(b.min()[0], j, k));
      std::fill(row, row + b.extent(0), v);
    }
}

std::size_t BinaryMask::popcount() const noexcept {
  // occupancy is normalised to 0/1, so a plain sum counts set voxels
  return std::accumulate(occupancy_.begin(), occupancy_.end(), std::size_t{0});
}

bool BinaryMask::operator==(const BinaryMask &other) const noexcept {
  return geometry_.same_grid(other.geometry_) && occupancy_ == other.occupancy_;
}

BinaryMask mask_boolean(const BinaryMask &a, const BinaryMask &b, BooleanOp op) {
  require_same_grid(a.geometry(), b.geometry(), "mask_boolean");
  std::vector<std::uint8_t> out(a.occupancy().size());
  const auto av = a.occupancy();
  const auto bv = b.occupancy();
  switch (op) {
  case BooleanOp::Union:
    std::transform(av.begin(), av.end(), bv.begin(), out.begin(), [](auto x, auto y) { return std::uint8_t(x | y); });
    break;
  case BooleanOp::Intersect:
    std::transform(av.begin(), av.end(), bv.begin(), out.begin(), [](auto x, auto y) { return std::uint8_t(x & y); });
    break;
  case BooleanOp::Subtract:
    std::transform(av.begin(), av.end(), bv.begin(), out.begin(),
                   [](auto x, auto y) { return std::uint8_t(x & (y ^ 1)); });
    break;
  }
  return {a.geometry(), std::move(out)};
}

bool is_subset(const BinaryMask &inner, const BinaryMask &outer) {
  require_same_grid(inner.geometry(), outer.geometry(), "is_subset");
  const auto iv = inner.occupancy();
  const auto ov = outer.occupancy();
  for (std::size_t n = 0; n < iv.size(); ++n)
    if (iv[n] > ov[n])
      return false;
  return true;
}

} // namespace apf
