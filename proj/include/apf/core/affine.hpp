#pragma once

#include <array>
#include <string>

#include "apf/core/types.hpp"

namespace apf {

using Matrix4 = std::array<std::array<double, 4>, 4>;

/// Validated 4x4 homogeneous affine. The last row is (0,0,0,1) within 1e-9
/// and the upper-left 3x3 block has |det| > 1e-12.
class Affine4 {
public:
  /// Throws InvalidTransform when the matrix is not a valid affine.
  explicit Affine4(const Matrix4 &m);

  static Affine4 identity();
  static Affine4 translation(const Vec3 &t);
  /// diag(s) followed by a translation to `origin`: p -> s * p + origin.
  static Affine4 scaling(const Vec3 &s, const Vec3 &origin = {0.0, 0.0, 0.0});

  const Matrix4 &matrix() const noexcept { return m_; }
  double operator()(int row, int col) const { return m_[row][col]; }

  Vec3 apply(const Vec3 &p) const noexcept;
  Affine4 inverse() const;
  /// this * other (other is applied first).
  Affine4 compose(const Affine4 &other) const;
  double linear_determinant() const noexcept;

  std::string to_string() const;

private:
  Matrix4 m_;
};

} // namespace apf
