#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "athom/geometry.hpp"

using namespace athom;

namespace {
void expect_orthogonal(const Mat<2>& r) {
  auto p = matmul<2>(transpose<2>(r), r);
  EXPECT_NEAR(frobenius_distance<2>(p, identity_matrix<2>()), 0.0, 1e-12);
}
}  // namespace

TEST(Rotation, IdentityForE2) {
  auto r = build_rotation<2>(Vec<2>{0.0, 1.0});
  EXPECT_NEAR(frobenius_distance<2>(r, identity_matrix<2>()), 0.0, 0.0);
}

TEST(Rotation, E1) {
  auto r = build_rotation<2>(Vec<2>{1.0, 0.0});
  expect_orthogonal(r);
  auto col = matvec<2>(r, Vec<2>{0.0, 1.0});
  EXPECT_DOUBLE_EQ(col[0], 1.0);
  EXPECT_DOUBLE_EQ(col[1], 0.0);
  EXPECT_DOUBLE_EQ(r[0][0] * r[1][1] - r[0][1] * r[1][0], 1.0);
  // First column -e2.
  EXPECT_DOUBLE_EQ(r[0][0], 0.0);
  EXPECT_DOUBLE_EQ(r[1][0], -1.0);
}

TEST(Rotation, RationalDirection) {
  auto r = build_rotation<2>(Vec<2>{0.6, 0.8});
  expect_orthogonal(r);
  EXPECT_DOUBLE_EQ(r[0][0], 0.8);
  EXPECT_DOUBLE_EQ(r[0][1], 0.6);
  EXPECT_DOUBLE_EQ(r[1][0], -0.6);
  EXPECT_DOUBLE_EQ(r[1][1], 0.8);
  auto e = matvec<2>(r, Vec<2>{0.0, 1.0});
  EXPECT_NEAR(e[0], 0.6, 1e-15);
  EXPECT_NEAR(e[1], 0.8, 1e-15);
}

TEST(Rotation, ZeroVectorRejected) {
  EXPECT_THROW(Direction<2>::normalized(Vec<2>{0.0, 0.0}), InputError);
  EXPECT_THROW(build_rotation<2>(Vec<2>{0.0, 0.0}), InputError);
  EXPECT_THROW(build_rotation<2>(Vec<2>{0.6, 0.7}), InputError);
}

TEST(Rotation, RandomDirectionsProperties) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> th(-kPi, kPi);
  for (int s = 0; s < 500; ++s) {
    auto nu = Direction<2>::from_angle(th(rng));
    auto r = build_rotation(nu);
    expect_orthogonal(r);
    auto e = matvec<2>(r, Vec<2>{0.0, 1.0});
    EXPECT_NEAR(e[0], nu[0], 1e-12);
    EXPECT_NEAR(e[1], nu[1], 1e-12);
    // R_{-nu} maps the cube Q onto R_nu Q: R_nu^T R_{-nu} is a symmetry of the square.
    auto s2 = matmul<2>(transpose<2>(r), build_rotation(-nu));
    for (auto& row : s2)
      for (double x : row) EXPECT_NEAR(std::abs(x) * (1.0 - std::abs(x)), 0.0, 1e-12);
  }
}

TEST(Rotation, LipschitzOnHemisphere) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> th(0.01, kPi - 0.01);
  std::uniform_real_distribution<double> d(-1e-3, 1e-3);
  for (int s = 0; s < 200; ++s) {
    double t = th(rng);
    auto n1 = Direction<2>::from_angle(t);
    auto n2 = Direction<2>::from_angle(t + d(rng));
    double dist = frobenius_distance<2>(build_rotation(n1), build_rotation(n2));
    EXPECT_LE(dist, 2.0 * norm<2>(n1.vec() - n2.vec()) + 1e-15);
  }
}

TEST(Rotation, OneDimensional) {
  EXPECT_DOUBLE_EQ(build_rotation<1>(Vec<1>{-1.0})[0][0], -1.0);
}

TEST(JumpFunction, Examples) {
  auto e2 = Direction<2>::exact({0.0, 1.0});
  EXPECT_EQ(jump_function<2>(1.0, e2, {0.3, 0.2}), 1.0);
  EXPECT_EQ(jump_function<2>(1.0, e2, {0.3, -0.2}), 0.0);
  auto nu = Direction<2>::exact({0.6, 0.8});
  EXPECT_EQ(jump_function<2>(5.0, nu, {0.8, -0.6}), 5.0);
  EXPECT_EQ(jump_function<2>(5.0, e2, {0.7, 0.0}), 5.0);
}

TEST(RotatedCubeGrid, NodeCountAndBounds) {
  auto nu = Direction<2>::from_angle(0.37);
  RotatedCubeGrid<2> g(nu, 3.0, 0.1);
  EXPECT_EQ(g.nodes_per_axis(), 31);
  EXPECT_EQ(g.node_count(), 31u * 31u);
  EXPECT_DOUBLE_EQ(g.boundary_layer(), 2.0 * g.spacing());
  for (int i = 0; i < g.nodes_per_axis(); ++i)
    for (int j = 0; j < g.nodes_per_axis(); ++j) {
      auto p = g.to_local(g.node({i, j}));
      EXPECT_LE(std::max(std::abs(p[0]), std::abs(p[1])), 1.5 + 0.05 + 1e-12);
      // Back-rotated nodes form the axis lattice.
      EXPECT_NEAR(p[0], -1.5 + i * g.spacing(), 1e-12);
      EXPECT_NEAR(p[1], -1.5 + j * g.spacing(), 1e-12);
    }
}

TEST(RotatedCubeGrid, BoundaryLayer) {
  RotatedCubeGrid<2> g(Direction<2>::exact({0.0, 1.0}), 1.0, 0.125);
  EXPECT_EQ(g.layer_nodes(), 2);
  EXPECT_TRUE(g.in_boundary_layer({0, 4}));
  EXPECT_TRUE(g.in_boundary_layer({1, 4}));
  EXPECT_FALSE(g.in_boundary_layer({2, 4}));
  EXPECT_TRUE(g.in_boundary_layer({4, 7}));
  EXPECT_THROW(RotatedCubeGrid<2>(g.nu(), -1.0, 0.1), InputError);
}

TEST(TorusGrid, Wraps) {
  TorusGrid<2> t(8);
  EXPECT_EQ(t.wrap(-1), 7);
  EXPECT_EQ(t.wrap(8), 0);
  EXPECT_EQ(t.wrap(-17), 7);
  EXPECT_EQ(t.index({-1, 9}), t.index({7, 1}));
  EXPECT_DOUBLE_EQ(t.cell_midpoint({7, 0})[0], 15.0 / 16.0);
}
