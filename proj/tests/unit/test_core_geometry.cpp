#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "apf/core/affine.hpp"
#include "apf/core/box.hpp"
#include "apf/core/errors.hpp"
#include "apf/core/geometry.hpp"
#include "test_support.hpp"

namespace apf {
namespace {

Matrix4 identity_matrix() {
  Matrix4 m{};
  for (int i = 0; i < 4; ++i)
    m[i][i] = 1.0;
  return m;
}

TEST(SnapToInteger, RecognisesNearIntegers) {
  EXPECT_EQ(std::ceil(snap_to_integer(3.6 / 0.4)), 9.0);
  EXPECT_EQ(std::ceil(snap_to_integer(3.2 / 0.4)), 8.0);
  EXPECT_EQ(snap_to_integer(2.5), 2.5);
  EXPECT_EQ(snap_to_integer(-4.0000000000001), -4.0);
}

TEST(Affine, RejectsBadLastRow) {
  Matrix4 m = identity_matrix();
  m[3][3] = 2.0;
  EXPECT_THROW(Affine4{m}, InvalidTransform);
  m = identity_matrix();
  m[3][0] = 1e-3;
  EXPECT_THROW(Affine4{m}, InvalidTransform);
  m = identity_matrix();
  m[3][0] = 1e-12;  // inside tolerance
  EXPECT_NO_THROW(Affine4{m});
}

TEST(Affine, RejectsSingularAndNonFinite) {
  Matrix4 m = identity_matrix();
  m[2][2] = 0.0;
  EXPECT_THROW(Affine4{m}, InvalidTransform);
  m = identity_matrix();
  m[0][1] = std::nan("");
  EXPECT_THROW(Affine4{m}, InvalidTransform);
}

TEST(Affine, InverseAndCompose) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix4 m = identity_matrix();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c)
        m[r][c] = u(rng) + (r == c ? 3.0 : 0.0);  // diagonally dominant, hence invertible
    const Affine4 t(m);
    const Affine4 round_trip = t.compose(t.inverse());
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        EXPECT_NEAR(round_trip(r, c), r == c ? 1.0 : 0.0, 1e-12);
    const Vec3 p{u(rng), u(rng), u(rng)};
    const Vec3 back = t.inverse().apply(t.apply(p));
    for (int a = 0; a < 3; ++a)
      EXPECT_NEAR(back[a], p[a], 1e-12);
  }
}

TEST(Affine, TranslationAndScaling) {
  const Affine4 t = Affine4::translation({1.0, -2.0, 3.5});
  EXPECT_EQ(t.apply({0, 0, 0}), (Vec3{1.0, -2.0, 3.5}));
  const Affine4 s = Affine4::scaling({2.0, 2.0, 2.0}, {1.0, 1.0, 1.0});
  EXPECT_EQ(s.apply({0, 0, 0}), (Vec3{1.0, 1.0, 1.0}));
  EXPECT_EQ(s.apply({2, 1, 1}), (Vec3{5.0, 3.0, 3.0}));
  EXPECT_DOUBLE_EQ(s.linear_determinant(), 8.0);
}

TEST(Geometry, ValidatesInputs) {
  EXPECT_THROW(Geometry::axis_aligned({0, 4, 4}, {1, 1, 1}), InvalidArgument);
  EXPECT_THROW(Geometry::axis_aligned({4, 4, 4}, {1, 0, 1}), InvalidArgument);
  const Geometry g = Geometry::axis_aligned({3, 4, 5}, {0.5, 1, 2});
  EXPECT_EQ(g.voxel_count(), 60u);
  EXPECT_EQ(g.offset(1, 2, 3), 1u + 3u * (2u + 4u * 3u));
}

TEST(Geometry, SameGridUsesRelativeTolerance) {
  const Geometry a = Geometry::axis_aligned({8, 8, 8}, {0.4, 0.4, 0.4}, {10, 20, 30});
  const Geometry b = Geometry::axis_aligned({8, 8, 8}, {0.40001, 0.4, 0.4}, {10, 20, 30});
  const Geometry c = Geometry::axis_aligned({8, 8, 8}, {0.401, 0.4, 0.4}, {10, 20, 30});
  const Geometry d = Geometry::axis_aligned({8, 8, 9}, {0.4, 0.4, 0.4}, {10, 20, 30});
  EXPECT_TRUE(a.same_grid(b));
  EXPECT_FALSE(a.same_grid(c));
  EXPECT_FALSE(a.same_grid(d));
  try {
    require_same_grid(a, d, "test");
    FAIL() << "expected GeometryMismatch";
  } catch (const GeometryMismatch &e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("8x8x8"), std::string::npos) << msg;
    EXPECT_NE(msg.find("8x8x9"), std::string::npos) << msg;
  }
}

TEST(VoxelBox, EmptyIsCanonical) {
  const VoxelBox a({3, 3, 3}, {3, 5, 5});
  const VoxelBox b({9, 0, 0}, {1, 1, 1});
  EXPECT_TRUE(a.is_empty());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.volume(), 0);
  EXPECT_EQ(VoxelBox({0, 0, 0}, {2, 3, 4}).volume(), 24);
}

TEST(VoxelBox, IntersectClipAndDilate) {
  const VoxelBox a({0, 0, 0}, {4, 4, 4});
  const VoxelBox b({2, 2, 2}, {6, 6, 6});
  EXPECT_EQ(a.intersect(b), VoxelBox({2, 2, 2}, {4, 4, 4}));
  EXPECT_TRUE(a.intersect(VoxelBox({4, 0, 0}, {5, 1, 1})).is_empty());
  EXPECT_EQ(VoxelBox({-3, 1, 2}, {2, 9, 3}).clipped({4, 4, 4}), VoxelBox({0, 1, 2}, {2, 4, 3}));
  EXPECT_EQ(a.dilated({1, 2, 0}), VoxelBox({-1, -2, 0}, {5, 6, 4}));
  EXPECT_TRUE(a.contains(Index3{3, 3, 3}));
  EXPECT_FALSE(a.contains(Index3{4, 3, 3}));
}

TEST(WorldBox, RejectsInvertedOrNonFinite) {
  EXPECT_THROW(WorldBox({0, 0, 1}, {1, 1, 0}), InvalidArgument);
  EXPECT_THROW(WorldBox({0, 0, std::nan("")}, {1, 1, 1}), InvalidArgument);
  EXPECT_NO_THROW(WorldBox({1, 1, 1}, {1, 1, 1}));
}

TEST(TransformWorldBox, IdentityAndTranslation) {
  const WorldBox box({1, 2, 3}, {4, 5, 6});
  EXPECT_EQ(transform_world_box(Affine4::identity(), box), box);
  const WorldBox moved = transform_world_box(Affine4::translation({5, 0, 0}), box);
  EXPECT_EQ(moved, WorldBox({6, 2, 3}, {9, 5, 6}));
}

TEST(TransformWorldBox, RotationOfUnitCube) {
  const double c = std::cos(M_PI / 4), s = std::sin(M_PI / 4);
  Matrix4 m = identity_matrix();
  m[0][0] = c;
  m[0][1] = -s;
  m[1][0] = s;
  m[1][1] = c;
  const WorldBox out = transform_world_box(Affine4(m), WorldBox({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}));
  // corner (0.5, 0.5) lands on (0, sqrt(2)/2): extents +-sqrt(2)/2 in x and y
  const double h = std::sqrt(2.0) / 2.0;
  EXPECT_NEAR(out.min_mm()[0], -h, 1e-12);
  EXPECT_NEAR(out.max_mm()[0], h, 1e-12);
  EXPECT_NEAR(out.min_mm()[1], -h, 1e-12);
  EXPECT_NEAR(out.max_mm()[1], h, 1e-12);
  EXPECT_NEAR(out.min_mm()[2], -0.5, 1e-12);
  EXPECT_NEAR(out.max_mm()[2], 0.5, 1e-12);
}

TEST(ExpandWorldBox, Margins) {
  const WorldBox box({0, 0, 0}, {10, 10, 10});
  EXPECT_EQ(expand_world_box(box, 0.0), box);
  const WorldBox e = expand_world_box(box, 3.2);
  for (int a = 0; a < 3; ++a) {
    EXPECT_DOUBLE_EQ(e.min_mm()[a], -3.2);
    EXPECT_DOUBLE_EQ(e.max_mm()[a], 13.2);
  }
  // cube volume grows by (L + 2m)^3 / L^3
  EXPECT_NEAR(e.volume_mm3() / box.volume_mm3(), std::pow(16.4 / 10.0, 3), 1e-12);
  EXPECT_THROW(expand_world_box(box, -0.1), InvalidArgument);
}

TEST(VoxelizeWorldBox, RoundsOutward) {
  const Geometry g = Geometry::axis_aligned({10, 10, 10}, {1, 1, 1});
  EXPECT_EQ(voxelize_world_box(WorldBox({0.2, 0.2, 0.2}, {3.7, 3.7, 3.7}), g), VoxelBox({0, 0, 0}, {4, 4, 4}));
  EXPECT_EQ(voxelize_world_box(WorldBox({0, 0, 0}, {9, 9, 9}), g), VoxelBox::full({10, 10, 10}));
  EXPECT_EQ(voxelize_world_box(WorldBox({-5, -5, -5}, {20, 20, 20}), g), VoxelBox::full({10, 10, 10}));
  EXPECT_TRUE(voxelize_world_box(WorldBox({-8, -8, -8}, {-2, -2, -2}), g).is_empty());
  EXPECT_TRUE(voxelize_world_box(WorldBox({11, 0, 0}, {12, 3, 3}), g).is_empty());
}

TEST(VoxelizeWorldBox, AnisotropicOffsetGrid) {
  const Geometry g = Geometry::axis_aligned({20, 20, 10}, {0.5, 0.5, 2.0}, {-5.0, 0.0, 10.0});
  // x: (-4.1 + 5) / 0.5 = 1.8 -> 1 ; (-1.0 + 5) / 0.5 = 8 -> 9 exclusive
  // z: (10 - 10) / 2 = 0 ; (15 - 10) / 2 = 2.5 -> 3 exclusive
  EXPECT_EQ(voxelize_world_box(WorldBox({-4.1, 1.0, 10.0}, {-1.0, 2.0, 15.0}), g), VoxelBox({1, 2, 0}, {9, 5, 3}));
}

TEST(VoxelizeWorldBox, BackMappedBoxContainsClippedInput) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-6.0, 26.0);
  const Geometry g = Geometry::axis_aligned({16, 12, 20}, {1.0, 0.7, 1.3}, {-1.0, 2.0, 0.5});
  const WorldBox grid_extent = voxel_box_to_world(VoxelBox({0, 0, 0}, {15, 11, 19}), g);
  for (int trial = 0; trial < 500; ++trial) {
    Vec3 lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      const double x = u(rng), y = u(rng);
      lo[a] = std::min(x, y);
      hi[a] = std::max(x, y);
    }
    const WorldBox box(lo, hi);
    const VoxelBox vb = voxelize_world_box(box, g);
    // clip the input to the span of voxel centres
    Vec3 clo{}, chi{};
    bool empty = false;
    for (int a = 0; a < 3; ++a) {
      clo[a] = std::max(lo[a], grid_extent.min_mm()[a]);
      chi[a] = std::min(hi[a], grid_extent.max_mm()[a]);
      empty = empty || clo[a] > chi[a];
    }
    if (empty)
      continue;
    ASSERT_FALSE(vb.is_empty()) << "trial " << trial;
    const WorldBox back = voxel_box_to_world(vb, g);
    for (int a = 0; a < 3; ++a) {
      EXPECT_LE(back.min_mm()[a], clo[a] + 1e-9);
      EXPECT_GE(back.max_mm()[a], chi[a] - 1e-9);
    }
  }
}

} // namespace
} // namespace apf
