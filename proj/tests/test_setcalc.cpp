#include <gtest/gtest.h>

#include "test_support.hpp"

namespace irtmpc {
namespace {

using testing::Rows;
using testing::Vec;

TEST(SupportPolytope, Box) {
  const auto s = support_polytope(HPolyhedron::box(2), Vec({1, 1}));
  ASSERT_TRUE(s.bounded);
  EXPECT_NEAR(s.value, 2.0, 1e-9);
  EXPECT_NEAR((s.maximizer - Vec({1, 1})).norm(), 0.0, 1e-7);
}

TEST(SupportPolytope, ZeroDirection) {
  EXPECT_EQ(support_polytope(HPolyhedron::box(2), Vec({0, 0})).value, 0.0);
}

TEST(SupportPolytope, ThreeRowTriangle) {
  const HPolyhedron P = HPolyhedron::unit_offsets(Rows({{1, 2}, {-1, 0}, {0, -1}}));
  const auto s = support_polytope(P, Vec({1, 0}));
  ASSERT_TRUE(s.bounded);
  EXPECT_NEAR(s.value, 3.0, 1e-9);
  EXPECT_NEAR((s.maximizer - Vec({3, -1})).norm(), 0.0, 1e-7);
}

TEST(SupportPolytope, UnboundedIsAValue) {
  const HPolyhedron strip = HPolyhedron::unit_offsets(Rows({{1, 0}, {-1, 0}}));
  const auto s = support_polytope(strip, Vec({0, 1}));
  EXPECT_FALSE(s.bounded);
  EXPECT_TRUE(std::isinf(s.value));
}

TEST(SupportS, HalfDiagonal) {
  EXPECT_NEAR(support_S(testing::HalfDiagonalS(), Vec({1, 0})), 2.0, 1e-9);
}

TEST(SupportS, NilpotentEqualsW) {
  Rng rng(3);
  const HPolyhedron W = testing::RandomPlanarCSet(rng);
  const ImplicitRPISet S(MatrixXd::Zero(2, 2), MatrixXd(), W, 0.0, 1);
  for (int k = 0; k < 10; ++k) {
    const VectorXd y = rng.normal_vector(2);
    EXPECT_NEAR(support_S(S, y), support_polytope(W, y).value, 1e-9);
  }
}

TEST(SupportS, ZeroDirection) {
  EXPECT_EQ(support_S(testing::HalfDiagonalS(), Vec({0, 0})), 0.0);
}

TEST(SupportS, CountsOneLpPerPower) {
  const auto S = testing::HalfDiagonalS();
  const long before = lp_counter();
  support_S(S, Vec({1, 2}));
  EXPECT_EQ(lp_counter() - before, S.N_S());
}

TEST(MemberS, Origin) { EXPECT_TRUE(member_S(testing::HalfDiagonalS(), Vec({0, 0})).member); }

TEST(MemberS, BoundaryOfTwoBox) {
  const auto S = testing::HalfDiagonalS();
  const auto yes = member_S(S, Vec({2, 0}));
  EXPECT_TRUE(yes.member);
  const auto no = member_S(S, Vec({2.0001, 0}));
  EXPECT_FALSE(no.member);
  EXPECT_GT(no.cert_eq.size() + no.cert_in.size(), 0);
}

TEST(MemberS, EqualsWWhenSingleTerm) {
  const ImplicitRPISet S(0.3 * MatrixXd::Identity(2, 2), MatrixXd(), HPolyhedron::box(2), 0.0, 1);
  EXPECT_TRUE(member_S(S, Vec({1, 1})).member);
  EXPECT_FALSE(member_S(S, Vec({1.01, 1})).member);
}

TEST(MemberS, WitnessReproducesPoint) {
  const auto S = testing::HalfDiagonalS();
  const VectorXd x = Vec({1.3, -0.7});
  const auto r = member_S(S, x);
  ASSERT_TRUE(r.member);
  VectorXd back = VectorXd::Zero(2);
  for (int j = 0; j < S.N_S(); ++j) {
    const VectorXd w = r.omega.segment(2 * j, 2);
    EXPECT_TRUE(S.W().contains(w, 1e-8));
    back += S.scale() * S.power(j) * w;
  }
  EXPECT_NEAR((back - x).norm(), 0.0, 1e-8);
}

TEST(SupportTerminal, ZeroHorizonIsPlainSupport) {
  Rng rng(9);
  const HPolyhedron Z = testing::RandomPlanarCSet(rng);
  const ImplicitTerminalSet T(0.7 * MatrixXd::Identity(2, 2), MatrixXd(), Z, 0);
  for (int k = 0; k < 5; ++k) {
    const VectorXd y = rng.normal_vector(2);
    EXPECT_NEAR(support_terminal_intersection(T, y).value, support_polytope(Z, y).value, 1e-12);
  }
}

TEST(SupportTerminal, ContractingChainIsInactive) {
  const ImplicitTerminalSet T(0.5 * MatrixXd::Identity(2, 2), MatrixXd(), HPolyhedron::box(2), 1);
  const auto s = support_terminal_intersection(T, Vec({1, 0}));
  ASSERT_TRUE(s.bounded);
  EXPECT_NEAR(s.value, 1.0, 1e-9);
  EXPECT_EQ(support_terminal_intersection(T, Vec({0, 0})).value, 0.0);
}

TEST(SupportTerminal, ChainCutsTheSet) {
  // Rotation by 45 degrees scaled by 1: the intersection of B∞ with its
  // rotated copy is the regular octagon with support 1 along e1.
  const double c = std::sqrt(0.5);
  const ImplicitTerminalSet T(Rows({{c, -c}, {c, c}}), MatrixXd(), HPolyhedron::box(2), 1);
  EXPECT_NEAR(support_terminal_intersection(T, Vec({1, 1})).value, std::sqrt(2.0), 1e-8);
  EXPECT_LT(support_terminal_intersection(T, Vec({1, 1})).value,
            support_polytope(HPolyhedron::box(2), Vec({1, 1})).value - 0.5);
}

TEST(MemberZf, Examples) {
  const ImplicitTerminalSet T(0.5 * MatrixXd::Identity(2, 2), MatrixXd(), HPolyhedron::box(2), 1);
  EXPECT_TRUE(member_Zf(T, Vec({0, 0})));
  EXPECT_TRUE(member_Zf(T, Vec({1, 1})));
  EXPECT_FALSE(member_Zf(T, Vec({1.1, 0})));
}

TEST(MemberZf, FailsOnlyAtLastStep) {
  // A_Z = 2I: (0.6, 0) passes k = 0 but fails at k = 1.
  const ImplicitTerminalSet T(2.0 * MatrixXd::Identity(2, 2), MatrixXd(), HPolyhedron::box(2), 1);
  EXPECT_TRUE(member_Zf(T.with_horizon(0), Vec({0.6, 0})));
  EXPECT_FALSE(member_Zf(T, Vec({0.6, 0})));
}

class RandomS : public ::testing::TestWithParam<int> {};

TEST_P(RandomS, HomogeneityAndSubadditivity) {
  Rng rng(100 + GetParam());
  const auto S = testing::RandomPlanarS(rng);
  for (int k = 0; k < 10; ++k) {
    const VectorXd a = rng.normal_vector(2), b = rng.normal_vector(2);
    const double t = rng.uniform(0.0, 5.0);
    const double sa = support_S(S, a);
    EXPECT_NEAR(support_S(S, t * a), t * sa, 1e-9 * std::max(1.0, std::abs(t * sa)));
    EXPECT_LE(support_S(S, a + b), sa + support_S(S, b) + 1e-9);
  }
}

TEST_P(RandomS, MembershipSupportConsistency) {
  Rng rng(200 + GetParam());
  const auto S = testing::RandomPlanarS(rng);
  const double r = support_S(S, Vec({1, 0})) + support_S(S, Vec({-1, 0})) +
                   support_S(S, Vec({0, 1})) + support_S(S, Vec({0, -1}));
  for (int k = 0; k < 10; ++k) {
    const VectorXd x = rng.normal_vector(2) * (r / 4);
    const bool in = member_S(S, x).member;
    bool separated = false;
    for (int d = 0; d < 50; ++d) {
      const VectorXd y = rng.normal_vector(2);
      const double h = support_S(S, y);
      if (in) EXPECT_LE(y.dot(x), h + 1e-7);
      if (y.dot(x) > h + 1e-7) separated = true;
    }
    if (separated) EXPECT_FALSE(in);
  }
}

TEST_P(RandomS, RobustInvariance) {
  Rng rng(300 + GetParam());
  const auto S = testing::RandomPlanarS(rng);
  const auto Wv = oracle::vertices_of(S.W()).vertices;
  int tested = 0;
  for (int k = 0; k < 40 && tested < 10; ++k) {
    const VectorXd x = rng.normal_vector(2);
    const auto r = member_S(S, x);
    if (!r.member) continue;
    ++tested;
    const VectorXd w = Wv[rng.uniform_int(0, static_cast<int>(Wv.size()) - 1)];
    const VectorXd next = S.A_K() * x + w;
    // The boundary is tight; give the LP one feasibility tolerance of room.
    SolverSettings st;
    st.feas_tol = 1e-7;
    EXPECT_TRUE(member_S(S, next, st).member) << "x = " << x.transpose();
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomS, ::testing::Range(0, 8));

TEST(MemberZfProperty, ForwardInvariantAfterCertification) {
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    const MatrixXd AZ = testing::RandomStableMatrix(rng, 2, 0.5, 0.98);
    const HPolyhedron Z = testing::RandomPlanarCSet(rng);
    const auto nz = find_NZ(ImplicitTerminalSet(AZ, MatrixXd(), Z, 0), NZMode::kExact, 500);
    const ImplicitTerminalSet T(AZ, MatrixXd(), Z, nz.N_Z);
    for (int k = 0; k < 50; ++k) {
      const VectorXd z = rng.normal_vector(2);
      if (member_Zf(T, z, 0.0)) EXPECT_TRUE(member_Zf(T, AZ * z, 1e-9));
    }
  }
}

}  // namespace
}  // namespace irtmpc
