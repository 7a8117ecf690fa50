#include "apf/core/overlap.hpp"

#include <numeric>

namespace apf {

std::int64_t box_mask_overlap(const VoxelBox &box, const BinaryMask &mask) {
  const Geometry &g = mask.geometry();
  const VoxelBox b = box.clipped(g.dims());
  if (b.is_empty())
    return 0;
  const auto occ = mask.occupancy();
  const std::int64_t width = b.extent(0);
  std::int64_t total = 0;
  for (std::int64_t k = b.min()[2]; k < b.max()[2]; ++k)
    for (std::int64_t j = b.min()[1]; j < b.max()[1]; ++j) {
      const auto row = occ.subspan(g.offset(b.min()[0], j, k), static_cast<std::size_t>(width));
      total += std::accumulate(row.begin(), row.end(), std::int64_t{0});
    }
  return total;
}

} // namespace apf
