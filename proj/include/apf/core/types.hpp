#pragma once

#include <array>
#include <cstdint>

namespace apf {

using Index3 = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;

/// Snap values within `tol` of an integer onto that integer. Used before
/// floor/ceil so that e.g. 3.6 / 0.4 = 9.000000000000002 rounds as 9.
double snap_to_integer(double x, double tol = 1e-9);

} // namespace apf
