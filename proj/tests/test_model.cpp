#include <gtest/gtest.h>

#include "test_support.hpp"

namespace irtmpc {
namespace {

using testing::Rows;
using testing::Vec;

TEST(ValidatePlant, StableAIsStabilizable) {
  EXPECT_TRUE(validate_plant({Rows({{0.5}}), Rows({{0}})}).pass);
}

TEST(ValidatePlant, UncontrollableUnstableMode) {
  const auto rep = validate_plant({Rows({{2}}), Rows({{0}})});
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.issues.empty());
}

TEST(ValidatePlant, DoubleIntegrator) {
  EXPECT_TRUE(validate_plant({Rows({{1, 1}, {0, 1}}), Rows({{0}, {1}})}).pass);
}

TEST(ValidatePlant, NonFiniteIsDataError) {
  EXPECT_THROW(validate_plant({Rows({{NAN}}), Rows({{1}})}), DataError);
}

TEST(ValidatePlant, PartiallyUncontrollableUnstable) {
  // Mode 1.5 on x2 is not reachable from u.
  EXPECT_FALSE(validate_plant({Rows({{0.5, 0}, {0, 1.5}}), Rows({{1}, {0}})}).pass);
  // Same plant with the stable mode unreachable instead.
  EXPECT_TRUE(validate_plant({Rows({{0.5, 0}, {0, 1.5}}), Rows({{0}, {1}})}).pass);
}

TEST(ValidatePolyhedron, UnitBox) {
  const auto rep = validate_polyhedron(HPolyhedron::box(2), SetRole::kDisturbance);
  EXPECT_TRUE(rep.pass);
  EXPECT_TRUE(rep.details["bounded"].get<bool>());
  EXPECT_TRUE(rep.details["redundant_rows"].empty());
}

TEST(ValidatePolyhedron, StripIsUnbounded) {
  const HPolyhedron strip = HPolyhedron::unit_offsets(Rows({{1, 0}, {-1, 0}}));
  const auto rep = validate_polyhedron(strip, SetRole::kDisturbance);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.details["bounded"].get<bool>());
}

TEST(ValidatePolyhedron, ScaledStageBox) {
  const HPolyhedron Y = box_stage_set(2, 1, 100, 50);
  EXPECT_EQ(Y.rows(), 6);
  EXPECT_EQ(Y.dim(), 3);
  const auto rep = validate_polyhedron(Y, SetRole::kStage);
  EXPECT_TRUE(rep.pass);
  EXPECT_TRUE(Y.contains(Vec({100, -100, 50})));
  EXPECT_FALSE(Y.contains(Vec({100.001, 0, 0})));
}

TEST(ValidatePolyhedron, ZeroNormalIsDataError) {
  EXPECT_THROW(validate_polyhedron(HPolyhedron::unit_offsets(Rows({{1, 0}, {0, 0}})),
                                   SetRole::kStage),
               DataError);
}

TEST(ValidatePolyhedron, FlagsRedundantRowWithoutRemovingIt) {
  MatrixXd a(5, 2);
  a << 1, 0, -1, 0, 0, 1, 0, -1, 0.5, 0;  // x1 <= 2 is implied by x1 <= 1
  const HPolyhedron P = HPolyhedron::unit_offsets(a);
  const auto rep = validate_polyhedron(P, SetRole::kDisturbance);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.details["redundant_rows"], json::array({4}));
  EXPECT_EQ(P.rows(), 5);
}

TEST(ValidatePolyhedron, OriginOnBoundaryFails) {
  const HPolyhedron P(Rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}), Vec({1, 0, 1, 1}));
  EXPECT_FALSE(validate_polyhedron(P, SetRole::kStage).pass);
}

TEST(HPolyhedronNormalized, DividesByOffsets) {
  const auto P = HPolyhedron::normalized(Rows({{2, 0}, {0, 4}}), Vec({2, 8}));
  EXPECT_EQ(P.offsets, VectorXd::Ones(2));
  EXPECT_DOUBLE_EQ(P.normals(1, 1), 0.5);
  EXPECT_THROW(HPolyhedron::normalized(Rows({{1}}), Vec({0})), DataError);
  EXPECT_THROW(HPolyhedron::normalized(Rows({{1}}), Vec({-1})), DataError);
}

TEST(ValidateWeights, RejectsIndefinite) {
  EXPECT_TRUE(validate_weights({MatrixXd::Identity(2, 2), Rows({{1}})}).pass);
  EXPECT_FALSE(validate_weights({Rows({{1, 0}, {0, 0}}), Rows({{1}})}).pass);
  EXPECT_FALSE(validate_weights({Rows({{1, 1}, {0, 1}}), Rows({{1}})}).pass);
}

TEST(ValidateProblem, FixturePasses) {
  const auto rep = validate_problem(testing::DoubleIntegrator());
  EXPECT_TRUE(rep.pass) << rep.to_json().dump();
}

TEST(ValidationProperties, IdempotentAndPure) {
  const ProblemSpec s = testing::DoubleIntegrator();
  const ProblemSpec copy = s;
  const auto a = validate_problem(s).to_json();
  const auto b = validate_problem(s).to_json();
  EXPECT_EQ(a, b);
  EXPECT_EQ(s.Y.normals, copy.Y.normals);
  EXPECT_EQ(s.plant.A, copy.plant.A);
}

TEST(ValidationProperties, ValidDisturbanceSetHasFinitePositiveSupport) {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const HPolyhedron W = testing::RandomPlanarCSet(rng);
    ASSERT_TRUE(validate_polyhedron(W, SetRole::kDisturbance).pass);
    for (int k = 0; k < 10; ++k) {
      VectorXd y = rng.normal_vector(2);
      y.normalize();
      const auto s = support_polytope(W, y);
      ASSERT_TRUE(s.bounded);
      EXPECT_GE(s.value, 1e-8);
    }
  }
}

TEST(ValidationProperties, ValidPlantAdmitsLqrGain) {
  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    const int n = rng.uniform_int(1, 5), m = rng.uniform_int(1, 3);
    Plant p{rng.normal_matrix(n, n), rng.normal_matrix(n, m)};
    if (!validate_plant(p).pass) continue;
    const auto r = gain_lqr(p.A, p.B, MatrixXd::Identity(n, n), MatrixXd::Identity(m, m));
    EXPECT_LT(spectral_radius(p.A + p.B * r.K), 1.0);
  }
}

TEST(NZModeParse, RoundTrip) {
  EXPECT_EQ(parse_nz_mode("exact"), NZMode::kExact);
  EXPECT_EQ(parse_nz_mode(to_string(NZMode::kSufficient)), NZMode::kSufficient);
  EXPECT_THROW(parse_nz_mode("fast"), DataError);
}

TEST(ProblemSpecCheck, DimensionMismatch) {
  ProblemSpec s = testing::DoubleIntegrator();
  s.weights.R = MatrixXd::Identity(2, 2);
  EXPECT_THROW(s.check(), DataError);
  s = testing::DoubleIntegrator();
  s.N = 0;
  EXPECT_THROW(s.check(), DataError);
  s = testing::DoubleIntegrator();
  s.options.alpha_target = 1.0;
  EXPECT_THROW(s.check(), DataError);
}

}  // namespace
}  // namespace irtmpc
