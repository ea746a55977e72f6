#include <gtest/gtest.h>

#include "test_support.hpp"

namespace irtmpc {
namespace {

using oracle::Polygon2D;
using oracle::Vec2;
using testing::Rows;

Polygon2D Box(double r = 1.0) { return {{Vec2(-r, -r), Vec2(r, -r), Vec2(r, r), Vec2(-r, r)}}; }
Polygon2D Diamond() { return {{Vec2(0, -1), Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0)}}; }

void ExpectSameSupport(const Polygon2D& a, const Polygon2D& b, double tol = 1e-12) {
  for (const auto& y : oracle::compass(32))
    EXPECT_NEAR(oracle::support_2d(a, y), oracle::support_2d(b, y), tol);
}

TEST(Minkowski, BoxPlusBox) { ExpectSameSupport(oracle::minkowski_sum_2d(Box(), Box()), Box(2)); }

TEST(Minkowski, BoxPlusPoint) {
  const auto s = oracle::minkowski_sum_2d(Box(), Polygon2D{{Vec2(1, 0)}});
  EXPECT_EQ(s.vertices.size(), 4u);
  EXPECT_NEAR(oracle::support_2d(s, Vec2(1, 0)), 2.0, 1e-12);
  EXPECT_NEAR(oracle::support_2d(s, Vec2(-1, 0)), 0.0, 1e-12);
}

TEST(Minkowski, BoxPlusDiamondIsOctagon) {
  const auto s = oracle::minkowski_sum_2d(Box(), Diamond());
  EXPECT_EQ(s.vertices.size(), 8u);
  for (const auto& y : oracle::compass(16))
    EXPECT_NEAR(oracle::support_2d(s, y), y.lpNorm<1>() + y.lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Minkowski, CommutativeAndAssociative) {
  Rng rng(1);
  auto random_polygon = [&]() {
    std::vector<Vec2> pts;
    for (int i = 0; i < 7; ++i) pts.push_back(rng.normal_vector(2));
    return oracle::convex_hull(pts);
  };
  for (int t = 0; t < 20; ++t) {
    const auto a = random_polygon(), b = random_polygon(), c = random_polygon();
    ExpectSameSupport(oracle::minkowski_sum_2d(a, b), oracle::minkowski_sum_2d(b, a), 1e-12);
    ExpectSameSupport(oracle::minkowski_sum_2d(oracle::minkowski_sum_2d(a, b), c),
                      oracle::minkowski_sum_2d(a, oracle::minkowski_sum_2d(b, c)), 1e-12);
    EXPECT_LE(oracle::minkowski_sum_2d(a, b).vertices.size(), a.vertices.size() + b.vertices.size());
  }
}

TEST(ConvexHull, CounterClockwiseWithoutDuplicates) {
  const auto h = oracle::convex_hull({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1),
                                      Vec2(0.5, 0.5), Vec2(1, 0), Vec2(0.5, 0)});
  ASSERT_EQ(h.vertices.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_GT(oracle::cross(h.vertices[i], h.vertices[(i + 1) % 4], h.vertices[(i + 2) % 4]), 0);
}

TEST(Member2d, BoundaryIsInside) {
  EXPECT_TRUE(oracle::member_2d(Box(), Vec2(1, 1)));
  EXPECT_FALSE(oracle::member_2d(Box(), Vec2(1.01, 1)));
  EXPECT_DOUBLE_EQ(oracle::support_2d(Box(), Vec2(1, 1)), 2.0);
}

TEST(IntersectHalfspaces, BoxCutToRectangle) {
  MatrixXd a = Rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 0}});
  VectorXd b(5);
  b << 1, 1, 1, 1, 0.5;
  const auto r = oracle::intersect_halfspaces_2d(a, b);
  ASSERT_TRUE(r.bounded);
  ExpectSameSupport(r.polygon, Polygon2D{{Vec2(-1, -1), Vec2(0.5, -1), Vec2(0.5, 1), Vec2(-1, 1)}});
}

TEST(IntersectHalfspaces, FlagsUnbounded) {
  const auto r = oracle::intersect_halfspaces_2d(Rows({{1, 0}, {-1, 0}, {0, 1}}), VectorXd::Ones(3));
  EXPECT_FALSE(r.bounded);
}

TEST(ExplicitS, HalfDiagonalIsTwoBox) {
  ExpectSameSupport(oracle::explicit_S_2d(testing::HalfDiagonalS()), Box(2), 1e-12);
}

TEST(ExplicitS, NilpotentIsW) {
  const ImplicitRPISet S(MatrixXd::Zero(2, 2), MatrixXd(), HPolyhedron::box(2), 0.0, 1);
  ExpectSameSupport(oracle::explicit_S_2d(S), Box(), 1e-12);
}

TEST(ExplicitS, AgreesWithImplicitSupport) {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto S = testing::RandomPlanarS(rng);
    const auto P = oracle::explicit_S_2d(S);
    for (const auto& y : oracle::compass(16)) EXPECT_NEAR(support_S(S, y), oracle::support_2d(P, y), 1e-6);
  }
}

TEST(ExplicitZf, MatchesMemberZfOnGrid) {
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const MatrixXd AZ = testing::RandomStableMatrix(rng, 2, 0.6, 0.95);
    const HPolyhedron Z = testing::RandomPlanarCSet(rng);
    const ImplicitTerminalSet T(AZ, MatrixXd(), Z, 3);
    const auto E = oracle::explicit_Zf_2d(T);
    ASSERT_TRUE(E.bounded);
    const double r = std::max(oracle::support_2d(E.polygon, Vec2(1, 0)),
                              oracle::support_2d(E.polygon, Vec2(0, 1))) * 1.3;
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 20; ++j) {
        const Vec2 z(-r + 2 * r * i / 20, -r + 2 * r * j / 20);
        const bool a = member_Zf(T, z, 1e-9);
        const bool b = oracle::member_2d(E.polygon, z, 1e-9);
        // Skip points within round-off of the boundary.
        bool near = false;
        const auto& v = E.polygon.vertices;
        for (std::size_t e = 0; e < v.size(); ++e) {
          const Vec2 d = v[(e + 1) % v.size()] - v[e];
          near |= std::abs(oracle::cross(v[e], v[(e + 1) % v.size()], z)) / d.norm() < 1e-6;
        }
        if (!near) EXPECT_EQ(a, b) << z.transpose();
      }
  }
}

}  // namespace
}  // namespace irtmpc
