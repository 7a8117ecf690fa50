#include "apf/phantom/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "apf/core/errors.hpp"

namespace apf::phantom {

std::int64_t oracle_box_overlap(const VoxelBox &box, const BinaryMask &mask) {
  if (box.is_empty())
    return 0;
  const Index3 &dims = mask.geometry().dims();
  std::int64_t count = 0;
  for (std::int64_t k = box.min()[2]; k < box.max()[2]; ++k)
    for (std::int64_t j = box.min()[1]; j < box.max()[1]; ++j)
      for (std::int64_t i = box.min()[0]; i < box.max()[0]; ++i) {
        const bool inside = i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
        if (inside && mask.at(i, j, k))
          ++count;
      }
  return count;
}

BinaryMask oracle_dilate(const BinaryMask &mask, double radius_mm) {
  if (radius_mm < 0.0)
    throw InvalidArgument("oracle_dilate: negative radius");
  const Geometry &g = mask.geometry();
  const Index3 &dims = g.dims();
  std::int64_t r[3];
  for (int a = 0; a < 3; ++a) {
    // quotients within 1e-6 (relative) of an integer count as that integer
    const double q = radius_mm / g.spacing_mm()[a];
    const double nearest = std::nearbyint(q);
    const bool integral = std::fabs(q - nearest) <= 1e-6 * std::max(1.0, std::fabs(q));
    r[a] = static_cast<std::int64_t>(integral ? nearest : std::ceil(q));
  }

  BinaryMask out(g);
  for (std::int64_t k = 0; k < dims[2]; ++k)
    for (std::int64_t j = 0; j < dims[1]; ++j)
      for (std::int64_t i = 0; i < dims[0]; ++i) {
        bool hit = false;
        for (std::int64_t dk = -r[2]; dk <= r[2]; ++dk)
          for (std::int64_t dj = -r[1]; dj <= r[1]; ++dj)
            for (std::int64_t di = -r[0]; di <= r[0]; ++di) {
              const std::int64_t x = i + di, y = j + dj, z = k + dk;
              if (x < 0 || y < 0 || z < 0 || x >= dims[0] || y >= dims[1] || z >= dims[2])
                continue;
              if (mask.at(x, y, z))
                hit = true;
            }
        out.set(i, j, k, hit);
      }
  return out;
}

BinaryMask oracle_boolean(const BinaryMask &a, const BinaryMask &b, BooleanOp op) {
  if (a.geometry().dims() != b.geometry().dims())
    throw GeometryMismatch("oracle_boolean: dims differ");
  const Index3 &dims = a.geometry().dims();
  BinaryMask out(a.geometry());
  for (std::int64_t k = 0; k < dims[2]; ++k)
    for (std::int64_t j = 0; j < dims[1]; ++j)
      for (std::int64_t i = 0; i < dims[0]; ++i) {
        const bool x = a.at(i, j, k);
        const bool y = b.at(i, j, k);
        bool v = false;
        if (op == BooleanOp::Union)
          v = x || y;
        else if (op == BooleanOp::Intersect)
          v = x && y;
        else
          v = x && !y;
        out.set(i, j, k, v);
      }
  return out;
}

} // namespace apf::phantom
