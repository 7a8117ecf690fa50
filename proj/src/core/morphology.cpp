#include "apf/core/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "apf/core/errors.hpp"

namespace apf {

Index3 mm_to_voxel_radius(const Vec3 &spacing_mm, double radius_mm) {
  if (!(radius_mm >= 0.0) || !std::isfinite(radius_mm))
    throw InvalidArgument(fmt::format("dilation radius must be >= 0 mm, got {}", radius_mm));
  Index3 r{};
  for (int a = 0; a < 3; ++a) {
    if (!(spacing_mm[a] > 0.0))
      throw InvalidArgument(fmt::format("spacing must be positive, got {} on axis {}", spacing_mm[a], a));
    r[a] = static_cast<std::int64_t>(std::ceil(snap_to_integer(radius_mm / spacing_mm[a], 1e-6)));
  }
  return r;
}

namespace {

using Buffer = std::vector<std::uint8_t>;

// Dilate every x-row independently with a running count of set voxels
// in the window [i - r, i + r].
void pass_x(const std::uint8_t *src, std::uint8_t *dst, const Index3 &dims, std::int64_t r) {
  const std::int64_t nx = dims[0];
  const std::int64_t rows = dims[1] * dims[2];
  for (std::int64_t row = 0; row < rows; ++row) {
    const std::uint8_t *s = src + row * nx;
    std::uint8_t *d = dst + row * nx;
    std::int64_t count = 0;
    for (std::int64_t i = 0; i <= std::min(r, nx - 1); ++i)
      count += s[i];
    for (std::int64_t i = 0; i < nx; ++i) {
      d[i] = count > 0 ? 1 : 0;
      if (i + r + 1 < nx)
        count += s[i + r + 1];
      if (i - r >= 0)
        count -= s[i - r];
    }
  }
}

// Shared by the y and z passes: slide a window of `lines` (each `width`
// contiguous bytes, `stride` apart) across `n` positions, keeping per-column counts.
void pass_strided(const std::uint8_t *src, std::uint8_t *dst, std::int64_t n, std::int64_t width,
                  std::int64_t stride, std::int64_t r, std::vector<std::uint32_t> &counts) {
  std::fill(counts.begin(), counts.begin() + width, 0u);
  auto add = [&](std::int64_t line, int sign) {
    const std::uint8_t *s = src + line * stride;
    if (sign > 0)
      for (std::int64_t c = 0; c < width; ++c)
        counts[c] += s[c];
    else
      for (std::int64_t c = 0; c < width; ++c)
        counts[c] -= s[c];
  };
  for (std::int64_t l = 0; l <= std::min(r, n - 1); ++l)
    add(l, +1);
  for (std::int64_t l = 0; l < n; ++l) {
    std::uint8_t *d = dst + l * stride;
    for (std::int64_t c = 0; c < width; ++c)
      d[c] = counts[c] > 0 ? 1 : 0;
    if (l + r + 1 < n)
      add(l + r + 1, +1);
    if (l - r >= 0)
      add(l - r, -1);
  }
}

void pass_y(const std::uint8_t *src, std::uint8_t *dst, const Index3 &dims, std::int64_t r,
            std::vector<std::uint32_t> &counts) {
  const std::int64_t slice = dims[0] * dims[1];
  for (std::int64_t k = 0; k < dims[2]; ++k)
    pass_strided(src + k * slice, dst + k * slice, dims[1], dims[0], dims[0], r, counts);
}

void pass_z(const std::uint8_t *src, std::uint8_t *dst, const Index3 &dims, std::int64_t r,
            std::vector<std::uint32_t> &counts) {
  const std::int64_t slice = dims[0] * dims[1];
  pass_strided(src, dst, dims[2], slice, slice, r, counts);
}

} // namespace

BinaryMask dilate_mask_voxels(const BinaryMask &mask, const Index3 &radius) {
  for (int a = 0; a < 3; ++a)
    if (radius[a] < 0)
      throw InvalidArgument(fmt::format("voxel radius must be >= 0, got {} on axis {}", radius[a], a));

  const Index3 &dims = mask.geometry().dims();
  const auto src = mask.occupancy();
  Buffer a(src.begin(), src.end());
  if (radius == Index3{0, 0, 0})
    return {mask.geometry(), std::move(a)};

  Buffer b(a.size());
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(dims[0] * dims[1]));
  // ping-pong between a and b; skip axes with zero radius
  Buffer *cur = &a;
  Buffer *next = &b;
  if (radius[0] > 0) {
    pass_x(cur->data(), next->data(), dims, radius[0]);
    std::swap(cur, next);
  }
  if (radius[1] > 0) {
    pass_y(cur->data(), next->data(), dims, radius[1], counts);
    std::swap(cur, next);
  }
  if (radius[2] > 0) {
    pass_z(cur->data(), next->data(), dims, radius[2], counts);
    std::swap(cur, next);
  }
  return {mask.geometry(), std::move(*cur)};
}

BinaryMask dilate_mask(const BinaryMask &mask, double radius_mm) {
  return dilate_mask_voxels(mask, mm_to_voxel_radius(mask.geometry().spacing_mm(), radius_mm));
}

} // namespace apf
