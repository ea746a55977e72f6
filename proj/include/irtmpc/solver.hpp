#pragma once

// Dense interior-point solvers for the linear and convex quadratic programs
// produced by the rest of the library.
//
//   LP:  minimize cᵀx        subject to Aeq x = beq, Ain x <= bin
//   QP:  minimize ½xᵀHx+gᵀx  subject to Aeq x = beq, Ain x <= bin
//
// LPs are solved on the homogeneous self-dual embedding so that infeasible
// and unbounded instances terminate with certificates. QPs use an
// infeasible-start Mehrotra predictor-corrector; infeasibility is detected
// from diverging duals and confirmed with a phase-one LP. Both finish with an
// optional active-set polish that solves the KKT system of the identified
// active set exactly and keeps it only if it is primal/dual feasible.

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "irtmpc/errors.hpp"
#include "irtmpc/json_eigen.hpp"
#include "irtmpc/linalg.hpp"

namespace irtmpc {

struct SolverSettings {
  double feas_tol = 1e-8;
  double kkt_tol = 1e-8;
  int max_iter = 200;
  bool polish = true;
  // Non-empty: every problem handed to solve_lp/solve_qp is written there.
  std::string dump_dir;
};

struct LinearProgram {
  VectorXd c;
  MatrixXd Aeq;
  VectorXd beq;
  MatrixXd Ain;
  VectorXd bin;

  Eigen::Index num_vars() const { return c.size(); }
};

struct QuadraticProgram {
  MatrixXd H;
  VectorXd g;
  MatrixXd Aeq;
  VectorXd beq;
  MatrixXd Ain;
  VectorXd bin;

  Eigen::Index num_vars() const { return g.size(); }
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

/// Outcome of a solve.
///  - kOptimal:    x primal optimum, y/z equality/inequality multipliers
///                 (z >= 0), objective the primal value.
///  - kInfeasible: (y, z) is a Farkas certificate, z >= 0,
///                 Aeqᵀy + Ainᵀz ~ 0 and beqᵀy + binᵀz = -1.
///  - kUnbounded:  x is an improving ray, Aeq x ~ 0, Ain x <~ 0,
///                 linear cost along x = -1 (and H x ~ 0 for QPs).
struct SolveResult {
  SolveStatus status = SolveStatus::kOptimal;
  VectorXd x;
  VectorXd y;
  VectorXd z;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  bool polished = false;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

namespace detail {

inline double inf_norm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline double max_or_zero(const VectorXd& v) {
  return v.size() == 0 ? -std::numeric_limits<double>::infinity()
                       : v.maxCoeff();
}

// Step length to the boundary of the nonnegative orthant.
inline double max_step(const VectorXd& v, const VectorXd& dv) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  return a;
}

inline void check_blocks(Eigen::Index n, MatrixXd& Aeq, VectorXd& beq,
                         MatrixXd& Ain, VectorXd& bin,
                         const std::string& what) {
  if (Aeq.size() == 0 && beq.size() == 0) Aeq.resize(0, n);
  if (Ain.size() == 0 && bin.size() == 0) Ain.resize(0, n);
  if (Aeq.cols() != n || Aeq.rows() != beq.size())
    throw DataError(what + ": equality block shape mismatch");
  if (Ain.cols() != n || Ain.rows() != bin.size())
    throw DataError(what + ": inequality block shape mismatch");
  if (!Aeq.allFinite() || !beq.allFinite() || !Ain.allFinite() ||
      !bin.allFinite())
    throw DataError(what + ": non-finite constraint data");
}

// Solves the reduced Newton system
//   [ P + Gᵀ diag(d) G   Eᵀ ] [dx]   [r1]
//   [ E                  0  ] [dy] = [r2]
// through a regularized LU factorization plus iterative refinement against
// the unregularized matrix.
class ReducedKkt {
 public:
  void factor(const MatrixXd& P, const MatrixXd& E, const MatrixXd& G,
              const VectorXd& d) {
    nx_ = E.cols();
    ne_ = E.rows();
    const Eigen::Index dim = nx_ + ne_;
    exact_.setZero(dim, dim);
    auto top = exact_.topLeftCorner(nx_, nx_);
    if (P.size() != 0) top = P;
    if (G.rows() > 0) top.noalias() += G.transpose() * d.asDiagonal() * G;
    exact_.topRightCorner(nx_, ne_) = E.transpose();
    exact_.bottomLeftCorner(ne_, nx_) = E;
    // Regularize relative to P only: scaling by the barrier term would swamp
    // the inactive directions once z/s grows large.
    const double scale =
        P.size() != 0 ? std::max(1.0, P.diagonal().cwiseAbs().maxCoeff()) : 1.0;
    const double reg = 1e-10 * scale;
    MatrixXd regularized = exact_;
    regularized.topLeftCorner(nx_, nx_).diagonal().array() += reg;
    regularized.bottomRightCorner(ne_, ne_).diagonal().array() -= reg;
    lu_.compute(regularized);
  }

  static double detail_norm(const VectorXd& v) {
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  }

  void solve(const VectorXd& r1, const VectorXd& r2, VectorXd& dx,
             VectorXd& dy) const {
    VectorXd rhs(nx_ + ne_);
    rhs << r1, r2;
    VectorXd sol = lu_.solve(rhs);
    const double tol = 1e-15 * std::max(1.0, detail_norm(rhs));
    for (int k = 0; k < 10; ++k) {
      const VectorXd res = rhs - exact_ * sol;
      if (detail_norm(res) <= tol) break;
      sol += lu_.solve(res);
    }
    dx = sol.head(nx_);
    dy = sol.tail(ne_);
  }

 private:
  Eigen::Index nx_ = 0;
  Eigen::Index ne_ = 0;
  MatrixXd exact_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

struct PolishOutcome {
  bool accepted = false;
  VectorXd x, y, z;
};

// Active-set polish: solve the equality-constrained KKT system on the rows
// whose multiplier dominates their slack, accept if the result is a KKT
// point of the full problem at the requested tolerances.
inline PolishOutcome polish(const MatrixXd& H, const VectorXd& c,
                            const MatrixXd& E, const VectorXd& f,
                            const MatrixXd& G, const VectorXd& h,
                            const VectorXd& s, const VectorXd& z,
                            const SolverSettings& st) {
  PolishOutcome out;
  const Eigen::Index n = c.size(), ne = E.rows(), m = G.rows();
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < m; ++i)
    if (z(i) > s(i)) active.push_back(i);
  const Eigen::Index na = static_cast<Eigen::Index>(active.size());
  const Eigen::Index dim = n + ne + na;
  MatrixXd K = MatrixXd::Zero(dim, dim);
  VectorXd rhs(dim);
  if (H.size() != 0) K.topLeftCorner(n, n) = H;
  K.block(0, n, n, ne) = E.transpose();
  K.block(n, 0, ne, n) = E;
  rhs.head(n) = -c;
  rhs.segment(n, ne) = f;
  for (Eigen::Index a = 0; a < na; ++a) {
    K.block(0, n + ne + a, n, 1) = G.row(active[a]).transpose();
    K.block(n + ne + a, 0, 1, n) = G.row(active[a]);
    rhs(n + ne + a) = h(active[a]);
  }
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(K);
  VectorXd sol = cod.solve(rhs);
  if (!sol.allFinite()) return out;
  // One refinement sweep.
  sol += cod.solve(rhs - K * sol);

  out.x = sol.head(n);
  out.y = sol.segment(n, ne);
  out.z = VectorXd::Zero(m);
  for (Eigen::Index a = 0; a < na; ++a) out.z(active[a]) = sol(n + ne + a);

  const double pres_eq = inf_norm(E * out.x - f);
  const double pres_in = std::max(0.0, max_or_zero(G * out.x - h));
  if (pres_eq > st.feas_tol || pres_in > st.feas_tol) return out;
  if (m > 0 && out.z.minCoeff() < -st.kkt_tol) return out;
  VectorXd stat = c + E.transpose() * out.y + G.transpose() * out.z;
  if (H.size() != 0) stat += H * out.x;
  if (inf_norm(stat) > st.kkt_tol * (1.0 + inf_norm(c))) return out;
  out.z = out.z.cwiseMax(0.0);
  out.accepted = true;
  return out;
}

inline std::atomic<int>& dump_counter() {
  static std::atomic<int> counter{0};
  return counter;
}

inline std::string dump_problem(const std::string& dir,
                                const std::string& kind, const json& payload) {
  std::filesystem::create_directories(dir);
  const int id = dump_counter().fetch_add(1);
  const auto path = std::filesystem::path(dir) /
                    (kind + "_" + std::to_string(id) + ".json");
  std::ofstream os(path);
  json j = payload;
  j["kind"] = kind;
  os << j.dump(1) << "\n";
  return path.string();
}

}  // namespace detail

/// Homogeneous self-dual interior-point LP solver.
inline SolveResult solve_lp(const LinearProgram& lp,
                            const SolverSettings& st = {}) {
  const Eigen::Index n = lp.num_vars();
  if (n == 0) throw DataError("solve_lp: no variables");
  if (!lp.c.allFinite()) throw DataError("solve_lp: non-finite objective");
  MatrixXd E = lp.Aeq, G = lp.Ain;
  VectorXd f = lp.beq, h = lp.bin;
  detail::check_blocks(n, E, f, G, h, "solve_lp");
  const VectorXd& c = lp.c;
  if (!st.dump_dir.empty()) {
    detail::dump_problem(st.dump_dir, "lp",
                         {{"c", to_json_vector(c)},
                          {"Aeq", to_json_matrix(E)},
                          {"beq", to_json_vector(f)},
                          {"Ain", to_json_matrix(G)},
                          {"bin", to_json_vector(h)}});
  }
  const Eigen::Index ne = E.rows(), m = G.rows();
  const MatrixXd no_quadratic;

  detail::ReducedKkt kkt;
  VectorXd x, y, z, s;
  double tau = 1.0, kappa = 1.0;

  // Initial point: least-squares primal and dual estimates shifted into the
  // interior of the orthant.
  {
    kkt.factor(no_quadratic, E, G, VectorXd::Ones(m));
    VectorXd dx, dy;
    kkt.solve(G.transpose() * h, f, dx, dy);
    x = dx;
    s = h - G * x;
    kkt.solve(-c, VectorXd::Zero(ne), dx, dy);
    y = dy;
    z = G * dx;
    auto shift = [](VectorXd& v) {
      if (v.size() == 0) return;
      const double a = -v.minCoeff();
      if (a >= 0.0) v.array() += 1.0 + a;
    };
    shift(s);
    shift(z);
  }

  const double c_norm = detail::inf_norm(c);
  SolveResult res;
  int stalls = 0;
  for (int it = 0; it <= st.max_iter; ++it) {
    const VectorXd rx = E.transpose() * y + G.transpose() * z + c * tau;
    const VectorXd ry = E * x - f * tau;
    const VectorXd rz = s + G * x - h * tau;
    const double ctx = c.dot(x), bty = f.dot(y) + h.dot(z);
    const double rtau = kappa + ctx + bty;
    const double mu = (s.dot(z) + tau * kappa) / static_cast<double>(m + 1);

    const double pres =
        std::max(detail::inf_norm(ry), detail::inf_norm(rz)) / tau;
    const double dres = detail::inf_norm(rx) / tau;
    const double pcost = ctx / tau, dcost = -bty / tau;
    const double gap = s.dot(z) / (tau * tau);
    res.iterations = it;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.gap = gap;

    const double gap_tol =
        st.kkt_tol * (1.0 + std::min(std::abs(pcost), std::abs(dcost)));
    if (pres <= st.feas_tol && dres <= st.kkt_tol * (1.0 + c_norm) &&
        gap <= gap_tol && std::abs(pcost - dcost) <= gap_tol) {
      res.status = SolveStatus::kOptimal;
      res.x = x / tau;
      res.y = y / tau;
      res.z = z / tau;
      res.objective = c.dot(res.x);
      if (st.polish) {
        auto pol = detail::polish(no_quadratic, c, E, f, G, h, s / tau,
                                  res.z, st);
        if (pol.accepted) {
          res.x = pol.x;
          res.y = pol.y;
          res.z = pol.z;
          res.objective = c.dot(res.x);
          res.polished = true;
        }
      }
      return res;
    }
    // Primal infeasibility certificate.
    if (-bty > 0.0) {
      const double t = -bty;
      if (detail::inf_norm(E.transpose() * y + G.transpose() * z) <=
          st.feas_tol * t) {
        res.status = SolveStatus::kInfeasible;
        res.y = y / t;
        res.z = z / t;
        return res;
      }
    }
    // Dual infeasibility: improving ray.
    if (-ctx > 0.0) {
      const double t = -ctx;
      const double ray_res = std::max(detail::inf_norm(E * x),
                                      std::max(0.0, detail::max_or_zero(G * x)));
      if (ray_res <= st.feas_tol * t) {
        res.status = SolveStatus::kUnbounded;
        res.x = x / t;
        return res;
      }
    }
    if (it == st.max_iter) break;

    const VectorXd d = z.cwiseQuotient(s);
    kkt.factor(no_quadratic, E, G, d);

    auto reduced_solve = [&](const VectorXd& r1, const VectorXd& r2,
                             const VectorXd& r3, VectorXd& dx, VectorXd& dy,
                             VectorXd& dz) {
      kkt.solve(r1 + G.transpose() * d.cwiseProduct(r3), r2, dx, dy);
      dz = d.cwiseProduct(G * dx - r3);
    };

    VectorXd dx1, dy1, dz1;
    reduced_solve(-c, f, h, dx1, dy1, dz1);
    const double denom_base = c.dot(dx1) + f.dot(dy1) + h.dot(dz1);

    struct Dir {
      VectorXd dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double eta, const VectorXd& rsz, double rtk) {
      Dir dd;
      VectorXd dx2, dy2, dz2;
      reduced_solve(-eta * rx, -eta * ry, -eta * rz - rsz.cwiseQuotient(z),
                    dx2, dy2, dz2);
      const double denom = -kappa / tau + denom_base;
      const double num = -eta * rtau - rtk / tau - c.dot(dx2) - f.dot(dy2) -
                         h.dot(dz2);
      dd.dtau = std::abs(denom) > 1e-300 ? num / denom : 0.0;
      dd.dx = dx2 + dd.dtau * dx1;
      dd.dy = dy2 + dd.dtau * dy1;
      dd.dz = dz2 + dd.dtau * dz1;
      dd.ds = (rsz - s.cwiseProduct(dd.dz)).cwiseQuotient(z);
      dd.dkappa = (rtk - kappa * dd.dtau) / tau;
      return dd;
    };
    auto step_to_boundary = [&](const Dir& dd) {
      double a = std::min(detail::max_step(s, dd.ds),
                          detail::max_step(z, dd.dz));
      if (dd.dtau < 0.0) a = std::min(a, -tau / dd.dtau);
      if (dd.dkappa < 0.0) a = std::min(a, -kappa / dd.dkappa);
      return a;
    };

    const Dir aff = direction(1.0, -s.cwiseProduct(z), -tau * kappa);
    const double a_aff = std::min(1.0, step_to_boundary(aff));
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);
    const VectorXd rsz = -s.cwiseProduct(z) - aff.ds.cwiseProduct(aff.dz) +
                         VectorXd::Constant(m, sigma * mu);
    const double rtk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    const Dir cmb = direction(1.0 - sigma, rsz, rtk);
    const double alpha = std::min(1.0, 0.99 * step_to_boundary(cmb));
    if (!(alpha > 1e-13) || !cmb.dx.allFinite()) {
      if (++stalls >= 3) break;
      continue;
    }
    stalls = 0;
    x += alpha * cmb.dx;
    y += alpha * cmb.dy;
    z += alpha * cmb.dz;
    s += alpha * cmb.ds;
    tau += alpha * cmb.dtau;
    kappa += alpha * cmb.dkappa;
    // tau vanishing against kappa: no further progress is possible.
    if (tau < 1e-12 * kappa) break;
  }

  // Weakly infeasible problems stall with a certificate that is accurate
  // only to roundoff; accept it at reduced accuracy.
  if (tau < 1e-12 * kappa) {
    const double t = -(f.dot(y) + h.dot(z));
    if (t > 0.0 && detail::inf_norm(E.transpose() * y + G.transpose() * z) <=
                       std::sqrt(st.feas_tol) * t) {
      res.status = SolveStatus::kInfeasible;
      res.y = y / t;
      res.z = z / t;
      return res;
    }
  }

  // Iteration cap or stall: accept only a polished KKT point.
  if (st.polish && tau > 0.0) {
    auto pol = detail::polish(no_quadratic, c, E, f, G, h, s / tau, z / tau,
                              st);
    if (pol.accepted) {
      res.status = SolveStatus::kOptimal;
      res.x = pol.x;
      res.y = pol.y;
      res.z = pol.z;
      res.objective = c.dot(res.x);
      res.polished = true;
      return res;
    }
  }
  throw NumericalFailure("solve_lp: no convergence", res.iterations,
                         res.primal_residual, res.dual_residual, res.gap);
}

/// Infeasible-start primal-dual (Mehrotra) solver for convex QPs.
inline SolveResult solve_qp(const QuadraticProgram& qp,
                            const SolverSettings& st = {}) {
  const Eigen::Index n = qp.num_vars();
  if (n == 0) throw DataError("solve_qp: no variables");
  if (qp.H.rows() != n || qp.H.cols() != n)
    throw DataError("solve_qp: H shape mismatch");
  if (!qp.H.allFinite() || !qp.g.allFinite())
    throw DataError("solve_qp: non-finite cost data");
  const double h_norm = qp.H.cwiseAbs().maxCoeff();
  if (!is_symmetric(qp.H, 1e-9)) throw DataError("solve_qp: H not symmetric");
  {
    Eigen::LDLT<MatrixXd> ldlt(symmetrized(qp.H));
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().minCoeff() < -1e-9 * std::max(1.0, h_norm))
      throw DataError("solve_qp: H not positive semidefinite");
  }
  MatrixXd E = qp.Aeq, G = qp.Ain;
  VectorXd f = qp.beq, h = qp.bin;
  detail::check_blocks(n, E, f, G, h, "solve_qp");
  const MatrixXd H = symmetrized(qp.H);
  const VectorXd& c = qp.g;
  if (!st.dump_dir.empty()) {
    detail::dump_problem(st.dump_dir, "qp",
                         {{"H", to_json_matrix(H)},
                          {"g", to_json_vector(c)},
                          {"Aeq", to_json_matrix(E)},
                          {"beq", to_json_vector(f)},
                          {"Ain", to_json_matrix(G)},
                          {"bin", to_json_vector(h)}});
  }
  const Eigen::Index m = G.rows();
  auto objective = [&](const VectorXd& v) {
    return 0.5 * v.dot(H * v) + c.dot(v);
  };

  SolveResult res;
  detail::ReducedKkt kkt;
  VectorXd x, y, z, s;
  {
    kkt.factor(H, E, G, VectorXd::Ones(m));
    kkt.solve(-c + G.transpose() * h, f, x, y);
    s = (h - G * x).cwiseMax(1.0);
    z = VectorXd::Ones(m);
  }

  auto phase_one = [&]() -> SolveResult {
    LinearProgram feas{VectorXd::Zero(n), E, f, G, h};
    SolverSettings lst = st;
    lst.dump_dir.clear();
    lst.polish = false;
    return solve_lp(feas, lst);
  };

  const double c_norm = detail::inf_norm(c);
  int stalls = 0;
  // Least-infeasible iterate seen so far; polish starts from it if the
  // main loop breaks down.
  double best_merit = std::numeric_limits<double>::infinity();
  VectorXd best_s = s, best_z = z;
  for (int it = 0; it <= st.max_iter; ++it) {
    const VectorXd rd = H * x + c + E.transpose() * y + G.transpose() * z;
    const VectorXd re = E * x - f;
    const VectorXd ri = G * x + s - h;
    const double sz = s.dot(z);
    const double mu = m > 0 ? sz / static_cast<double>(m) : 0.0;
    const double pres = std::max(detail::inf_norm(re), detail::inf_norm(ri));
    const double dres = detail::inf_norm(rd);
    const double pobj = objective(x);
    res.iterations = it;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.gap = sz;
    const double merit =
        std::max({pres, dres / (1.0 + c_norm), sz / (1.0 + std::abs(pobj))});
    if (merit < best_merit) {
      best_merit = merit;
      best_s = s;
      best_z = z;
    }

    if (pres <= st.feas_tol && dres <= st.kkt_tol * (1.0 + c_norm) &&
        sz <= st.kkt_tol * (1.0 + std::abs(pobj))) {
      res.status = SolveStatus::kOptimal;
      res.x = x;
      res.y = y;
      res.z = z;
      res.objective = pobj;
      if (st.polish) {
        auto pol = detail::polish(H, c, E, f, G, h, s, z, st);
        if (pol.accepted && objective(pol.x) <=
                                pobj + st.kkt_tol * (1.0 + std::abs(pobj))) {
          res.x = pol.x;
          res.y = pol.y;
          res.z = pol.z;
          res.objective = objective(pol.x);
          res.polished = true;
        }
      }
      return res;
    }
    // Diverging duals along a Farkas direction.
    const double bty = f.dot(y) + h.dot(z);
    if (-bty > 0.0 &&
        detail::inf_norm(E.transpose() * y + G.transpose() * z) <=
            st.feas_tol * -bty) {
      res.status = SolveStatus::kInfeasible;
      res.y = y / -bty;
      res.z = z / -bty;
      return res;
    }
    // Diverging primal along an improving ray.
    const double ctx = c.dot(x);
    if (-ctx > 0.0) {
      const double t = -ctx;
      const double ray_res = std::max(
          {detail::inf_norm(H * x), detail::inf_norm(E * x),
           std::max(0.0, detail::max_or_zero(G * x))});
      if (ray_res <= st.feas_tol * t) {
        res.status = SolveStatus::kUnbounded;
        res.x = x / t;
        return res;
      }
    }
    if (it == st.max_iter) break;
    if (detail::inf_norm(z) > 1e12 || detail::inf_norm(x) > 1e12 ||
        detail::inf_norm(y) > 1e12)
      break;

    if (m == 0) {
      // Equality-constrained: one Newton step is exact.
      VectorXd dx, dy;
      kkt.factor(H, E, G, VectorXd::Zero(0));
      kkt.solve(-rd, -re, dx, dy);
      x += dx;
      y += dy;
      continue;
    }

    const VectorXd d = z.cwiseQuotient(s);
    kkt.factor(H, E, G, d);
    struct Dir {
      VectorXd dx, dy, dz, ds;
    };
    auto direction = [&](const VectorXd& rsz) {
      Dir dd;
      const VectorXd w = (rsz + z.cwiseProduct(ri)).cwiseQuotient(s);
      kkt.solve(-rd - G.transpose() * w, -re, dd.dx, dd.dy);
      const VectorXd gdx = G * dd.dx;
      dd.dz = d.cwiseProduct(gdx) + w;
      dd.ds = -ri - gdx;
      return dd;
    };
    auto step_to_boundary = [&](const Dir& dd) {
      return std::min(detail::max_step(s, dd.ds), detail::max_step(z, dd.dz));
    };

    const Dir aff = direction(-s.cwiseProduct(z));
    const double a_aff = std::min(1.0, step_to_boundary(aff));
    const double mu_aff =
        (s + a_aff * aff.ds).dot(z + a_aff * aff.dz) / static_cast<double>(m);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3), 0.0, 1.0);
    const VectorXd rsz = -s.cwiseProduct(z) - aff.ds.cwiseProduct(aff.dz) +
                         VectorXd::Constant(m, sigma * mu);
    const Dir cmb = direction(rsz);
    const double alpha = std::min(1.0, 0.99 * step_to_boundary(cmb));
    if (!(alpha > 1e-13) || !cmb.dx.allFinite()) {
      if (++stalls >= 3) break;
      continue;
    }
    stalls = 0;
    x += alpha * cmb.dx;
    y += alpha * cmb.dy;
    z += alpha * cmb.dz;
    s += alpha * cmb.ds;
  }

  if (st.polish && m > 0) {
    auto pol = detail::polish(H, c, E, f, G, h, best_s, best_z, st);
    if (pol.accepted) {
      res.status = SolveStatus::kOptimal;
      res.x = pol.x;
      res.y = pol.y;
      res.z = pol.z;
      res.objective = objective(pol.x);
      res.polished = true;
      return res;
    }
  }
  // Either the constraints are infeasible (confirmed by a phase-one LP with
  // certificate) or this is a genuine numerical failure.
  SolveResult feas = phase_one();
  if (feas.status == SolveStatus::kInfeasible) {
    feas.iterations += res.iterations;
    return feas;
  }
  throw NumericalFailure("solve_qp: no convergence", res.iterations,
                         res.primal_residual, res.dual_residual, res.gap);
}

/// Max violation of the constraints at x (0 when feasible).
inline double constraint_violation(const MatrixXd& Aeq, const VectorXd& beq,
                                   const MatrixXd& Ain, const VectorXd& bin,
                                   const VectorXd& x) {
  double v = 0.0;
  if (Aeq.rows() > 0) v = std::max(v, (Aeq * x - beq).cwiseAbs().maxCoeff());
  if (Ain.rows() > 0) v = std::max(v, (Ain * x - bin).maxCoeff());
  return v;
}

}  // namespace irtmpc
