#include "apf/core/affine.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "apf/core/errors.hpp"

namespace apf {

namespace {

Eigen::Matrix4d to_eigen(const Matrix4 &m) {
  Eigen::Matrix4d e;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      e(r, c) = m[r][c];
  return e;
}

Matrix4 from_eigen(const Eigen::Matrix4d &e) {
  Matrix4 m{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      m[r][c] = e(r, c);
  return m;
}

} // namespace

double snap_to_integer(double x, double tol) {
  const double r = std::round(x);
  return std::abs(x - r) <= tol * std::max(1.0, std::abs(x)) ? r : x;
}

Affine4::Affine4(const Matrix4 &m) : m_(m) {
  for (const auto &row : m_)
    for (double v : row)
      if (!std::isfinite(v))
        throw InvalidTransform("affine contains a non-finite entry");
  constexpr double kRowTol = 1e-9;
  if (std::abs(m_[3][0]) > kRowTol || std::abs(m_[3][1]) > kRowTol || std::abs(m_[3][2]) > kRowTol ||
      std::abs(m_[3][3] - 1.0) > kRowTol) {
    throw InvalidTransform(fmt::format("affine last row must be (0 0 0 1), got ({} {} {} {})", m_[3][0], m_[3][1],
                                       m_[3][2], m_[3][3]));
  }
  m_[3] = {0.0, 0.0, 0.0, 1.0};
  if (std::abs(linear_determinant()) <= 1e-12)
    throw InvalidTransform("affine upper 3x3 block is singular");
}

Affine4 Affine4::identity() {
  return Affine4(Matrix4{{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}});
}

Affine4 Affine4::translation(const Vec3 &t) {
  return Affine4(Matrix4{{{1, 0, 0, t[0]}, {0, 1, 0, t[1]}, {0, 0, 1, t[2]}, {0, 0, 0, 1}}});
}

Affine4 Affine4::scaling(const Vec3 &s, const Vec3 &origin) {
  return Affine4(Matrix4{{{s[0], 0, 0, origin[0]}, {0, s[1], 0, origin[1]}, {0, 0, s[2], origin[2]}, {0, 0, 0, 1}}});
}

Vec3 Affine4::apply(const Vec3 &p) const noexcept {
  Vec3 out{};
  for (int r = 0; r < 3; ++r)
    out[r] = m_[r][0] * p[0] + m_[r][1] * p[1] + m_[r][2] * p[2] + m_[r][3];
  return out;
}

Affine4 Affine4::inverse() const {
  return Affine4(from_eigen(to_eigen(m_).inverse()));
}

Affine4 Affine4::compose(const Affine4 &other) const {
  return Affine4(from_eigen(to_eigen(m_) * to_eigen(other.m_)));
}

double Affine4::linear_determinant() const noexcept {
  return to_eigen(m_).topLeftCorner<3, 3>().determinant();
}

std::string Affine4::to_string() const {
  std::string s;
  for (const auto &row : m_)
    s += fmt::format("[{} {} {} {}]", row[0], row[1], row[2], row[3]);
  return s;
}

} // namespace apf
