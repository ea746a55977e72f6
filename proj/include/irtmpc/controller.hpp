#pragma once

// Online tube controller: one convex QP per sampling instant.
//
// Decision vector layout:
//   [z_0 v_0 | z_1 v_1 | ... | z_{N-1} v_{N-1} | z_N ... z_{N+N_Z} | ω_0 ... ω_{N_S-1}]

#include <filesystem>
#include <string>
#include <vector>

#include "irtmpc/errors.hpp"
#include "irtmpc/linalg.hpp"
#include "irtmpc/model.hpp"
#include "irtmpc/setcalc.hpp"
#include "irtmpc/solver.hpp"
#include "irtmpc/synthesis.hpp"

namespace irtmpc {

struct TubeDims {
  int n_d = 0, n_eq = 0, n_iq = 0;

  static TubeDims of(int n, int m, int N, int Ns, int Nz, int p, int q) {
    return {N * n + N * m + (Nz + 1) * n + Ns * n, n + N * n + Nz * n,
            Ns * q + N * p + (Nz + 1) * p};
  }
  bool operator==(const TubeDims&) const = default;
};

struct TubeIndex {
  int n = 0, m = 0, N = 0, Ns = 0, Nz = 0;

  /// Offset of z_k, 0 <= k <= N + N_Z.
  int z(int k) const {
    return k < N ? k * (n + m) : N * (n + m) + (k - N) * n;
  }
  /// Offset of v_k, 0 <= k < N.
  int v(int k) const { return k * (n + m) + n; }
  /// Offset of ω_j, 0 <= j < N_S.
  int omega(int j) const { return N * (n + m) + (Nz + 1) * n + j * n; }
  int size() const { return omega(Ns); }
};

struct TubeQP {
  QuadraticProgram qp;
  TubeIndex index;
  TubeDims dims;
};

/// Builds the tube QP at state x from a design and its problem.
inline TubeQP assemble_qp(const TubeDesign& d, const ProblemSpec& spec,
                          const VectorXd& x) {
  const int n = spec.n(), m = spec.m(), N = spec.N;
  const int Ns = d.N_S(), Nz = d.N_Z();
  const int p = spec.Y.rows(), q = spec.W.rows();
  if (x.size() != n) throw DataError("assemble_qp: x has wrong size");
  if (d.S.n() != n || d.terminal.n() != n || d.f.size() != p ||
      d.K_S().rows() != m || d.K_Z().rows() != m || d.P.rows() != n)
    throw DataError("assemble_qp: design does not match the problem");

  TubeQP t;
  t.index = TubeIndex{n, m, N, Ns, Nz};
  t.dims = TubeDims::of(n, m, N, Ns, Nz, p, q);
  const TubeIndex& ix = t.index;
  const int nd = ix.size();
  QuadraticProgram& qp = t.qp;

  const MatrixXd& Q = spec.weights.Q;
  const MatrixXd& R = spec.weights.R;
  const MatrixXd QZ = Q + d.K_Z().transpose() * R * d.K_Z();
  qp.H = MatrixXd::Zero(nd, nd);
  for (int k = 0; k < N; ++k) {
    qp.H.block(ix.z(k), ix.z(k), n, n) = 2.0 * Q;
    qp.H.block(ix.v(k), ix.v(k), m, m) = 2.0 * R;
  }
  for (int k = N; k < N + Nz; ++k) qp.H.block(ix.z(k), ix.z(k), n, n) = 2.0 * QZ;
  qp.H.block(ix.z(N + Nz), ix.z(N + Nz), n, n) = 2.0 * d.P;
  qp.H = symmetrized(qp.H);
  qp.g = VectorXd::Zero(nd);

  // Equalities: initialization, tube dynamics, terminal chain.
  qp.Aeq = MatrixXd::Zero(t.dims.n_eq, nd);
  qp.beq = VectorXd::Zero(t.dims.n_eq);
  int r = 0;
  qp.Aeq.block(r, ix.z(0), n, n) = MatrixXd::Identity(n, n);
  for (int j = 0; j < Ns; ++j)
    qp.Aeq.block(r, ix.omega(j), n, n) = d.S.scale() * d.S.power(j);
  qp.beq.segment(r, n) = x;
  r += n;
  for (int k = 0; k < N; ++k, r += n) {
    qp.Aeq.block(r, ix.z(k + 1), n, n) = MatrixXd::Identity(n, n);
    qp.Aeq.block(r, ix.z(k), n, n) = -spec.plant.A;
    qp.Aeq.block(r, ix.v(k), n, m) = -spec.plant.B;
  }
  for (int k = N; k < N + Nz; ++k, r += n) {
    qp.Aeq.block(r, ix.z(k + 1), n, n) = MatrixXd::Identity(n, n);
    qp.Aeq.block(r, ix.z(k), n, n) = -d.terminal.A_Z();
  }

  // Inequalities: ω_j ∈ W, tightened stage rows, terminal rows.
  qp.Ain = MatrixXd::Zero(t.dims.n_iq, nd);
  qp.bin = VectorXd::Zero(t.dims.n_iq);
  r = 0;
  for (int j = 0; j < Ns; ++j, r += q) {
    qp.Ain.block(r, ix.omega(j), q, n) = spec.W.normals;
    qp.bin.segment(r, q) = spec.W.offsets;
  }
  const MatrixXd C = spec.C(), D = spec.D();
  const VectorXd tight = VectorXd::Ones(p) - d.f;
  for (int k = 0; k < N; ++k, r += p) {
    qp.Ain.block(r, ix.z(k), p, n) = C;
    qp.Ain.block(r, ix.v(k), p, m) = D;
    qp.bin.segment(r, p) = tight;
  }
  const MatrixXd CZ = C + D * d.K_Z();
  for (int k = N; k <= N + Nz; ++k, r += p) {
    qp.Ain.block(r, ix.z(k), p, n) = CZ;
    qp.bin.segment(r, p) = tight;
  }
  return t;
}

struct OcpSolution {
  std::vector<VectorXd> z_path;  // N + N_Z + 1 entries
  std::vector<VectorXd> v_path;  // N entries
  std::vector<VectorXd> omega;   // N_S entries
  double value = 0.0;
  SolveStatus status = SolveStatus::kOptimal;
  int iterations = 0;
  bool optimal() const { return status == SolveStatus::kOptimal; }
};

namespace detail {

inline std::string dump_failed_qp(const QuadraticProgram& qp,
                                  const SolverSettings& st) {
  std::filesystem::path dir = st.dump_dir.empty()
                                  ? std::filesystem::temp_directory_path() / "irtmpc_failed_qp"
                                  : std::filesystem::path(st.dump_dir);
  try {
    return dump_problem(dir.string(), "failed_qp",
                 {{"H", to_json_matrix(qp.H)},
                  {"g", to_json_vector(qp.g)},
                  {"Aeq", to_json_matrix(qp.Aeq)},
                  {"beq", to_json_vector(qp.beq)},
                  {"Ain", to_json_matrix(qp.Ain)},
                  {"bin", to_json_vector(qp.bin)}});
  } catch (...) {
    return {};
  }
}

}  // namespace detail

/// Solves the tube QP. Infeasibility is a legal outcome (x outside the
/// controller's domain) and is reported through `status`.
inline OcpSolution solve_ocp(const TubeQP& t, const SolverSettings& st = {}) {
  SolveResult r;
  try {
    r = solve_qp(t.qp, st);
  } catch (const NumericalFailure& e) {
    const std::string where = detail::dump_failed_qp(t.qp, st);
    throw NumericalFailure(std::string(e.what()) +
                               (where.empty() ? "" : " (QP written to " + where + ")"),
                           e.iterations(), e.primal_residual(), e.dual_residual(),
                           e.gap());
  }
  OcpSolution s;
  s.status = r.status;
  s.iterations = r.iterations;
  if (!r.optimal()) return s;
  const TubeIndex& ix = t.index;
  for (int k = 0; k <= ix.N + ix.Nz; ++k) s.z_path.push_back(r.x.segment(ix.z(k), ix.n));
  for (int k = 0; k < ix.N; ++k) s.v_path.push_back(r.x.segment(ix.v(k), ix.m));
  for (int j = 0; j < ix.Ns; ++j) s.omega.push_back(r.x.segment(ix.omega(j), ix.n));
  s.value = std::max(0.0, 0.5 * r.x.dot(t.qp.H * r.x));
  return s;
}

struct StepDiagnostics {
  double value = 0.0;
  VectorXd z0, v0;
  int iterations = 0;
  double y_violation = 0.0;  // max_i c_iᵀx + d_iᵀu - 1
};

struct StepResult {
  VectorXd u;
  StepDiagnostics diag;
};

/// u = v_0⁰(x) + K_S (x - z_0⁰(x)). Throws NotInDomain when the QP is
/// infeasible at x.
inline StepResult mpc_step(const TubeDesign& d, const ProblemSpec& spec,
                           const VectorXd& x, const SolverSettings& st = {}) {
  const OcpSolution s = solve_ocp(assemble_qp(d, spec, x), st);
  if (s.status == SolveStatus::kInfeasible)
    throw NotInDomain("tube QP is infeasible at the current state");
  if (!s.optimal()) throw NumericalFailure("tube QP is unbounded");
  StepResult out;
  out.diag.z0 = s.z_path.front();
  out.diag.v0 = s.v_path.front();
  out.diag.value = s.value;
  out.diag.iterations = s.iterations;
  out.u = out.diag.v0 + d.K_S() * (x - out.diag.z0);
  VectorXd xu(spec.n() + spec.m());
  xu << x, out.u;
  out.diag.y_violation = (spec.Y.normals * xu - spec.Y.offsets).maxCoeff();
  return out;
}

}  // namespace irtmpc
