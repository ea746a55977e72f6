#include "irtmpc/solver.hpp"

#include <gtest/gtest.h>

#include <filesystem>

namespace irtmpc {
namespace {

MatrixXd Rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  MatrixXd m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

LinearProgram BoxSupportLp(const VectorXd& y) {
  LinearProgram lp;
  lp.c = -y;
  lp.Ain = Rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
  lp.bin = VectorXd::Ones(4);
  return lp;
}

TEST(SolveLp, BoxSupport) {
  auto r = solve_lp(BoxSupportLp(Eigen::Vector2d(1, 1)));
  ASSERT_TRUE(r.optimal());
  EXPECT_NEAR(-r.objective, 2.0, 1e-12);
  EXPECT_NEAR(r.x(0), 1.0, 1e-9);
  EXPECT_NEAR(r.x(1), 1.0, 1e-9);
}

TEST(SolveLp, TwoLowerBounds) {
  LinearProgram lp;
  lp.c = VectorXd::Ones(1);
  lp.Ain = Rows({{-1}, {-1}});
  lp.bin = Eigen::Vector2d(-1, -3);
  auto r = solve_lp(lp);
  ASSERT_TRUE(r.optimal());
  EXPECT_NEAR(r.objective, 3.0, 1e-10);
}

TEST(SolveLp, ThreeRowPolyhedronIsBoundedInE1) {
  // Vertices by pairwise row intersection: (1,0), (-1,2), (-1,-2);
  // the max of w1 is 1.
  LinearProgram lp;
  lp.c = Eigen::Vector2d(-1, 0);
  lp.Ain = Rows({{1, 1}, {1, -1}, {-1, 0}});
  lp.bin = VectorXd::Ones(3);
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(-r.objective, 1.0, 1e-10);
  EXPECT_NEAR(r.x(0), 1.0, 1e-9);
}

TEST(SolveLp, DetectsUnboundedWithRay) {
  LinearProgram lp;
  lp.c = Eigen::Vector2d(0, -1);
  lp.Ain = Rows({{1, 0}, {-1, 0}});
  lp.bin = VectorXd::Ones(2);
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, SolveStatus::kUnbounded);
  EXPECT_NEAR(lp.c.dot(r.x), -1.0, 1e-12);
  EXPECT_LE((lp.Ain * r.x).maxCoeff(), 1e-8);
}

TEST(SolveLp, DetectsInfeasibleWithFarkasCertificate) {
  LinearProgram lp;
  lp.c = Eigen::Vector2d(1, 1);
  lp.Ain = Rows({{1, 0}, {-1, 0}});
  lp.bin = Eigen::Vector2d(-1, -1);  // x1 <= -1 and x1 >= 1
  lp.Aeq = Rows({{0, 1}});
  lp.beq = VectorXd::Ones(1);
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, SolveStatus::kInfeasible);
  EXPECT_GE(r.z.minCoeff(), 0.0);
  EXPECT_NEAR(lp.beq.dot(r.y) + lp.bin.dot(r.z), -1.0, 1e-12);
  EXPECT_LE((lp.Aeq.transpose() * r.y + lp.Ain.transpose() * r.z)
                .cwiseAbs()
                .maxCoeff(),
            1e-8);
}

TEST(SolveLp, RejectsShapeMismatch) {
  LinearProgram lp;
  lp.c = VectorXd::Ones(2);
  lp.Ain = MatrixXd::Ones(3, 3);
  lp.bin = VectorXd::Ones(3);
  EXPECT_THROW(solve_lp(lp), DataError);
}

TEST(SolveQp, ScalarLowerBound) {
  QuadraticProgram qp;
  qp.H = 2.0 * MatrixXd::Identity(1, 1);
  qp.g = VectorXd::Zero(1);
  qp.Ain = Rows({{-1}});
  qp.bin = -VectorXd::Ones(1);
  auto r = solve_qp(qp);
  ASSERT_TRUE(r.optimal());
  EXPECT_NEAR(r.x(0), 1.0, 1e-9);
  EXPECT_NEAR(r.objective, 1.0, 1e-9);
}

TEST(SolveQp, ProjectionOntoLine) {
  QuadraticProgram qp;
  qp.H = MatrixXd::Identity(2, 2);
  qp.g = VectorXd::Zero(2);
  qp.Aeq = Rows({{1, 1}});
  qp.beq = 2.0 * VectorXd::Ones(1);
  auto r = solve_qp(qp);
  ASSERT_TRUE(r.optimal());
  EXPECT_NEAR(r.x(0), 1.0, 1e-9);
  EXPECT_NEAR(r.x(1), 1.0, 1e-9);
  EXPECT_NEAR(r.objective, 1.0, 1e-9);
}

TEST(SolveQp, SeparableClip) {
  QuadraticProgram qp;
  qp.H = 2.0 * MatrixXd::Identity(2, 2);
  qp.g = VectorXd::Zero(2);
  qp.Ain = MatrixXd::Identity(2, 2);
  qp.bin = Eigen::Vector2d(-1, -2);
  auto r = solve_qp(qp);
  ASSERT_TRUE(r.optimal());
  EXPECT_NEAR(r.x(0), -1.0, 1e-9);
  EXPECT_NEAR(r.x(1), -2.0, 1e-9);
  EXPECT_NEAR(r.objective, 5.0, 1e-9);
}

TEST(SolveQp, InfeasibleReturnsCertificate) {
  QuadraticProgram qp;
  qp.H = MatrixXd::Identity(1, 1);
  qp.g = VectorXd::Zero(1);
  qp.Ain = Rows({{1}, {-1}});
  qp.bin = Eigen::Vector2d(-1, -1);
  auto r = solve_qp(qp);
  ASSERT_EQ(r.status, SolveStatus::kInfeasible);
  EXPECT_NEAR(qp.bin.dot(r.z), -1.0, 1e-9);
}

TEST(SolveQp, RejectsIndefiniteHessian) {
  QuadraticProgram qp;
  qp.H = Rows({{1, 0}, {0, -1}});
  qp.g = VectorXd::Zero(2);
  EXPECT_THROW(solve_qp(qp), DataError);
}

// Random feasible problems built around a known interior point x0.
struct RandomInstance {
  MatrixXd E, G;
  VectorXd f, h, x0;
};

RandomInstance MakeInstance(Rng& rng, int n) {
  RandomInstance in;
  const int ne = rng.uniform_int(0, n - 1);
  const int m = rng.uniform_int(n + 1, 2 * n + 3);
  in.x0 = rng.normal_vector(n);
  in.E = rng.normal_matrix(ne, n);
  in.f = in.E * in.x0;
  in.G = rng.normal_matrix(m, n);
  VectorXd slack(m);
  for (int i = 0; i < m; ++i) slack(i) = rng.uniform(0.1, 2.0);
  in.h = in.G * in.x0 + slack;
  return in;
}

// Feasible point: random step in the null space of E, pulled back radially
// toward x0 until every inequality holds.
VectorXd FeasiblePoint(Rng& rng, const RandomInstance& in) {
  const int n = static_cast<int>(in.x0.size());
  MatrixXd N;
  if (in.E.rows() == 0) {
    N = MatrixXd::Identity(n, n);
  } else {
    Eigen::FullPivLU<MatrixXd> lu(in.E);
    N = lu.kernel();
  }
  VectorXd step = 3.0 * N * rng.normal_vector(static_cast<int>(N.cols()));
  double t = 1.0;
  const VectorXd gs = in.G * step;
  const VectorXd room = in.h - in.G * in.x0;
  for (Eigen::Index i = 0; i < gs.size(); ++i)
    if (gs(i) > 0) t = std::min(t, room(i) / gs(i));
  return in.x0 + t * step;
}

TEST(SolveLpProperty, StrongDualityOnRandomBoundedLps) {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = rng.uniform_int(1, 6);
    auto in = MakeInstance(rng, n);
    LinearProgram lp{rng.normal_vector(n), in.E, in.f, in.G, in.h};
    auto r = solve_lp(lp);
    if (r.status != SolveStatus::kOptimal) {
      ASSERT_EQ(r.status, SolveStatus::kUnbounded);
      continue;
    }
    const double dual = -(in.f.dot(r.y) + in.h.dot(r.z));
    EXPECT_NEAR(r.objective, dual, 1e-6 * (1.0 + std::abs(r.objective)));
    EXPECT_LE(constraint_violation(in.E, in.f, in.G, in.h, r.x), 1e-8);
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(SolveQpProperty, BeatsRandomFeasiblePoints) {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rng.uniform_int(1, 8);
    auto in = MakeInstance(rng, n);
    MatrixXd L = rng.normal_matrix(n, n);
    if (trial % 3 == 0) L.col(0).setZero();  // semidefinite case
    QuadraticProgram qp{L * L.transpose(), rng.normal_vector(n), in.E, in.f,
                        in.G, in.h};
    auto r = solve_qp(qp);
    if (r.status == SolveStatus::kUnbounded) continue;
    ASSERT_EQ(r.status, SolveStatus::kOptimal) << "trial " << trial;
    ASSERT_LE(constraint_violation(in.E, in.f, in.G, in.h, r.x), 1e-8);
    for (int k = 0; k < 100; ++k) {
      const VectorXd p = FeasiblePoint(rng, in);
      const double val = 0.5 * p.dot(qp.H * p) + qp.g.dot(p);
      ASSERT_LE(r.objective, val + 1e-7) << "trial " << trial;
    }
  }
}

TEST(SolveQpProperty, Deterministic) {
  Rng rng(5);
  auto in = MakeInstance(rng, 6);
  MatrixXd L = rng.normal_matrix(6, 6);
  QuadraticProgram qp{L * L.transpose(), rng.normal_vector(6), in.E, in.f,
                      in.G, in.h};
  auto a = solve_qp(qp);
  auto b = solve_qp(qp);
  ASSERT_EQ(a.x.size(), b.x.size());
  for (Eigen::Index i = 0; i < a.x.size(); ++i) EXPECT_EQ(a.x(i), b.x(i));
  EXPECT_EQ(a.objective, b.objective);
}

TEST(SolverDump, WritesOneFilePerProblem) {
  const auto dir = std::filesystem::temp_directory_path() / "irtmpc_dump_test";
  std::filesystem::remove_all(dir);
  SolverSettings st;
  st.dump_dir = dir.string();
  solve_lp(BoxSupportLp(Eigen::Vector2d(1, 0)), st);
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace irtmpc
