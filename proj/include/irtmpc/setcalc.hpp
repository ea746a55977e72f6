#pragma once

// Implicit set calculus. S and Z_f are never built; every query becomes a
// support or feasibility LP over the data that defines them.
//
//   S   = (1-α)⁻¹ (W ⊕ A_K W ⊕ ... ⊕ A_K^{N_S-1} W)
//   Z_f = ∩_{k=0..N_Z} A_Z^{-k} Z_S

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "irtmpc/errors.hpp"
#include "irtmpc/linalg.hpp"
#include "irtmpc/model.hpp"
#include "irtmpc/solver.hpp"

namespace irtmpc {

/// LPs solved by this thread through the set-calculus layer.
inline long& lp_counter() {
  thread_local long count = 0;
  return count;
}

struct SupportValue {
  bool bounded = true;
  double value = 0.0;  // +inf when unbounded
  VectorXd maximizer;  // empty when unbounded
};

/// max yᵀp over P. Unbounded directions are a value, not an error.
inline SupportValue support_polytope(const HPolyhedron& P, const VectorXd& y,
                                     const SolverSettings& st = {}) {
  if (y.size() != P.dim()) throw DataError("support: direction has wrong size");
  SupportValue out;
  if (y.cwiseAbs().maxCoeff() == 0.0) {
    out.maximizer = VectorXd::Zero(P.dim());
    return out;
  }
  LinearProgram lp;
  lp.c = -y;
  lp.Ain = P.normals;
  lp.bin = P.offsets;
  ++lp_counter();
  const SolveResult r = solve_lp(lp, st);
  switch (r.status) {
    case SolveStatus::kOptimal:
      out.value = -r.objective;
      out.maximizer = r.x;
      return out;
    case SolveStatus::kUnbounded:
      out.bounded = false;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    case SolveStatus::kInfeasible:
      break;
  }
  throw DataError("support: polyhedron is empty");
}

struct Membership {
  bool member = false;
  VectorXd omega;  // stacked witnesses ω_0..ω_{N_S-1} when member
  // Farkas certificate on "no": equality and inequality multipliers.
  VectorXd cert_eq, cert_in;
};

class ImplicitRPISet {
 public:
  ImplicitRPISet() = default;
  ImplicitRPISet(MatrixXd A_K, MatrixXd K_S, HPolyhedron W, double alpha,
                 int N_S)
      : A_K_(std::move(A_K)),
        K_S_(std::move(K_S)),
        W_(std::move(W)),
        alpha_(alpha),
        N_S_(N_S) {
    const auto n = A_K_.rows();
    if (n < 1 || A_K_.cols() != n) throw DataError("S: A_K must be square");
    if (K_S_.size() != 0 && K_S_.cols() != n)
      throw DataError("S: K_S must have n columns");
    if (W_.dim() != n) throw DataError("S: W has the wrong dimension");
    if (!(alpha_ >= 0.0 && alpha_ < 1.0))
      throw DataError("S: alpha must lie in [0, 1)");
    if (N_S_ < 1) throw DataError("S: N_S must be >= 1");
    powers_.reserve(N_S_);
    powers_.push_back(MatrixXd::Identity(n, n));
    for (int j = 1; j < N_S_; ++j) powers_.push_back(A_K_ * powers_.back());
  }

  int n() const { return static_cast<int>(A_K_.rows()); }
  const MatrixXd& A_K() const { return A_K_; }
  const MatrixXd& K_S() const { return K_S_; }
  const HPolyhedron& W() const { return W_; }
  double alpha() const { return alpha_; }
  int N_S() const { return N_S_; }
  double scale() const { return 1.0 / (1.0 - alpha_); }
  /// A_K^j for 0 <= j < N_S.
  const MatrixXd& power(int j) const { return powers_.at(j); }

 private:
  MatrixXd A_K_, K_S_;
  HPolyhedron W_;
  double alpha_ = 0.0;
  int N_S_ = 1;
  std::vector<MatrixXd> powers_;
};

/// σ_S(η) = (1-α)⁻¹ Σ_j σ_W((A_K^j)ᵀ η); exactly N_S LPs.
inline double support_S(const ImplicitRPISet& S, const VectorXd& eta,
                        const SolverSettings& st = {}) {
  if (eta.size() != S.n()) throw DataError("support_S: wrong direction size");
  double sum = 0.0;
  for (int j = 0; j < S.N_S(); ++j) {
    SupportValue s;
    try {
      s = support_polytope(S.W(), S.power(j).transpose() * eta, st);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(std::string(e.what()) + " (support_S, power " +
                                 std::to_string(j) + ")",
                             e.iterations(), e.primal_residual(),
                             e.dual_residual(), e.gap());
    }
    if (!s.bounded) throw DataError("support_S: W is unbounded");
    sum += s.value;
  }
  return S.scale() * sum;
}

/// Feasibility of x = (1-α)⁻¹ Σ A_K^j ω_j with every ω_j ∈ W.
inline Membership member_S(const ImplicitRPISet& S, const VectorXd& x,
                           const SolverSettings& st = {}) {
  const int n = S.n(), Ns = S.N_S(), q = S.W().rows();
  if (x.size() != n) throw DataError("member_S: point has wrong size");
  LinearProgram lp;
  lp.c = VectorXd::Zero(Ns * n);
  lp.Aeq.resize(n, Ns * n);
  for (int j = 0; j < Ns; ++j)
    lp.Aeq.middleCols(j * n, n) = S.scale() * S.power(j);
  lp.beq = x;
  lp.Ain = MatrixXd::Zero(Ns * q, Ns * n);
  for (int j = 0; j < Ns; ++j)
    lp.Ain.block(j * q, j * n, q, n) = S.W().normals;
  lp.bin = S.W().offsets.replicate(Ns, 1);
  ++lp_counter();
  const SolveResult r = solve_lp(lp, st);
  Membership out;
  if (r.status == SolveStatus::kOptimal) {
    out.member = true;
    out.omega = r.x;
  } else {
    out.cert_eq = r.y;
    out.cert_in = r.z;
  }
  return out;
}

class ImplicitTerminalSet {
 public:
  ImplicitTerminalSet() = default;
  ImplicitTerminalSet(MatrixXd A_Z, MatrixXd K_Z, HPolyhedron ZS, int N_Z)
      : A_Z_(std::move(A_Z)),
        K_Z_(std::move(K_Z)),
        ZS_(std::move(ZS)),
        N_Z_(N_Z) {
    const auto n = A_Z_.rows();
    if (n < 1 || A_Z_.cols() != n) throw DataError("Z_f: A_Z must be square");
    if (ZS_.dim() != n) throw DataError("Z_f: Z_S has the wrong dimension");
    if (N_Z_ < 0) throw DataError("Z_f: N_Z must be >= 0");
    if (ZS_.rows() > 0 && ZS_.offsets.minCoeff() <= 0.0)
      throw DataError("Z_f: Z_S offsets must be positive");
  }

  int n() const { return static_cast<int>(A_Z_.rows()); }
  const MatrixXd& A_Z() const { return A_Z_; }
  const MatrixXd& K_Z() const { return K_Z_; }
  const HPolyhedron& ZS() const { return ZS_; }
  int N_Z() const { return N_Z_; }

  ImplicitTerminalSet with_horizon(int nz) const {
    return ImplicitTerminalSet(A_Z_, K_Z_, ZS_, nz);
  }

 private:
  MatrixXd A_Z_, K_Z_;
  HPolyhedron ZS_;
  int N_Z_ = 0;
};

/// Z_S rows (c_i + K_Zᵀ d_i)ᵀ z <= 1 - f_i built from stage rows and f.
inline HPolyhedron build_ZS(const ProblemSpec& spec, const MatrixXd& K_Z,
                            const VectorXd& f) {
  if (f.size() != spec.Y.rows()) throw DataError("Z_S: f has wrong length");
  MatrixXd a = spec.C() + spec.D() * K_Z;
  return HPolyhedron(std::move(a), VectorXd::Ones(f.size()) - f);
}

/// Support of ∩_{k<=N_Z} A_Z^{-k} Z_S at ψ, through the LP over the chain
/// (z_0, ..., z_{N_Z}) with z_{k+1} = A_Z z_k and every z_k in Z_S.
inline SupportValue support_terminal_intersection(const ImplicitTerminalSet& T,
                                                  const VectorXd& psi,
                                                  const SolverSettings& st = {}) {
  const int n = T.n(), Nz = T.N_Z();
  if (psi.size() != n) throw DataError("support_terminal: wrong size");
  if (Nz == 0) return support_polytope(T.ZS(), psi, st);
  SupportValue out;
  if (psi.cwiseAbs().maxCoeff() == 0.0) {
    out.maximizer = VectorXd::Zero(n);
    return out;
  }
  // Rows with a zero normal only say 0 <= 1 - f_i; drop them.
  std::vector<int> keep;
  for (int i = 0; i < T.ZS().rows(); ++i)
    if (T.ZS().normals.row(i).cwiseAbs().maxCoeff() > 0.0) keep.push_back(i);
  const int p = static_cast<int>(keep.size());
  const int nv = (Nz + 1) * n;
  LinearProgram lp;
  lp.c = VectorXd::Zero(nv);
  lp.c.head(n) = -psi;
  lp.Aeq = MatrixXd::Zero(Nz * n, nv);
  for (int k = 0; k < Nz; ++k) {
    lp.Aeq.block(k * n, k * n, n, n) = T.A_Z();
    lp.Aeq.block(k * n, (k + 1) * n, n, n) = -MatrixXd::Identity(n, n);
  }
  lp.beq = VectorXd::Zero(Nz * n);
  lp.Ain = MatrixXd::Zero((Nz + 1) * p, nv);
  lp.bin.resize((Nz + 1) * p);
  for (int k = 0; k <= Nz; ++k)
    for (int r = 0; r < p; ++r) {
      lp.Ain.block(k * p + r, k * n, 1, n) = T.ZS().normals.row(keep[r]);
      lp.bin(k * p + r) = T.ZS().offsets(keep[r]);
    }
  ++lp_counter();
  const SolveResult r = solve_lp(lp, st);
  if (r.status == SolveStatus::kUnbounded) {
    out.bounded = false;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  if (r.status == SolveStatus::kInfeasible)
    throw DataError("support_terminal: intersection is empty");
  out.value = -r.objective;
  out.maximizer = r.x.head(n);
  return out;
}

/// Forward iteration of z through A_Z, checking Z_S at k = 0..N_Z. The
/// tolerance is absolute on each row.
inline bool member_Zf(const ImplicitTerminalSet& T, const VectorXd& z,
                      double tol = 1e-9) {
  if (z.size() != T.n()) throw DataError("member_Zf: point has wrong size");
  VectorXd zk = z;
  for (int k = 0; k <= T.N_Z(); ++k) {
    if (!zk.allFinite()) return false;
    if (!T.ZS().contains(zk, tol)) return false;
    if (k < T.N_Z()) zk = T.A_Z() * zk;
  }
  return true;
}

}  // namespace irtmpc
