#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <string>

#include "irtmpc/irtmpc.hpp"
#include "irtmpc/oracle.hpp"

namespace irtmpc::testing {

inline MatrixXd Rows(std::initializer_list<std::initializer_list<double>> rows) {
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

inline VectorXd Vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline std::string DataPath(const std::string& name) {
#ifdef IRTMPC_DATA_DIR
  return std::string(IRTMPC_DATA_DIR) + "/" + name;
#else
  return "data/" + name;
#endif
}

inline ProblemSpec DoubleIntegrator() { return load_problem(DataPath("double_integrator.json")); }

/// A_K = diag(0.5, 0.5), W = B∞, N_S = 2, α = 0.25; S = 2·B∞.
inline ImplicitRPISet HalfDiagonalS() {
  return ImplicitRPISet(0.5 * MatrixXd::Identity(2, 2), MatrixXd(), HPolyhedron::box(2), 0.25, 2);
}

/// Bounded planar polytope with 3..7 rows around the origin, offsets 1.
/// Normal angles stay within 0.2 of a step of even spacing, so consecutive
/// gaps are below π even for three rows.
inline HPolyhedron RandomPlanarCSet(Rng& rng) {
  const int k = rng.uniform_int(3, 7);
  MatrixXd a(k, 2);
  const double step = 2 * std::numbers::pi / k;
  const double phase = rng.uniform(0.0, step);
  for (int i = 0; i < k; ++i) {
    const double t = phase + i * step + rng.uniform(-0.2, 0.2) * step;
    const double r = rng.uniform(0.5, 2.0);
    a(i, 0) = r * std::cos(t);
    a(i, 1) = r * std::sin(t);
  }
  return HPolyhedron::unit_offsets(std::move(a));
}

/// Stable 2x2 matrix with spectral radius drawn in [lo, hi].
inline MatrixXd RandomStableMatrix(Rng& rng, int n, double lo, double hi) {
  MatrixXd G = rng.normal_matrix(n, n);
  while (spectral_radius(G) < 1e-6) G = rng.normal_matrix(n, n);
  return G * (rng.uniform(lo, hi) / spectral_radius(G));
}

/// Random certified 2-D cross-section with α target 0.5.
inline ImplicitRPISet RandomPlanarS(Rng& rng, const SolverSettings& st = {}) {
  const MatrixXd A_K = RandomStableMatrix(rng, 2, 0.1, 0.9);
  const HPolyhedron W = RandomPlanarCSet(rng);
  SynthesisOptions o;
  const NSResult ns = find_NS(A_K, W, o, st);
  return ImplicitRPISet(A_K, MatrixXd(), W, ns.alpha, ns.N_S);
}

/// Random problem with box Y and W for n <= 5, used where a full design is
/// needed.
inline ProblemSpec RandomBoxProblem(Rng& rng, int n, int m) {
  ProblemSpec s;
  s.plant.A = RandomStableMatrix(rng, n, 0.3, 1.2);
  s.plant.B = rng.normal_matrix(n, m);
  s.Y = box_stage_set(n, m, 10.0, 5.0);
  s.W = HPolyhedron::box(n, 0.1);
  s.weights.Q = MatrixXd::Identity(n, n);
  s.weights.R = MatrixXd::Identity(m, m);
  s.N = 3;
  return s;
}

}  // namespace irtmpc::testing
