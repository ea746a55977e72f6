#pragma once

// Offline design: gains, contraction horizon N_S and α, tightenings f,
// terminal cost and terminal horizon N_Z.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "irtmpc/errors.hpp"
#include "irtmpc/linalg.hpp"
#include "irtmpc/model.hpp"
#include "irtmpc/setcalc.hpp"
#include "irtmpc/solver.hpp"

namespace irtmpc {

// Comparisons against design thresholds (α target, ε, 1 - f_i) accept this
// much relative slack so that values that are analytically equal are not
// rejected on round-off.
inline constexpr double kThresholdSlack = 1e-12;

inline bool at_most(double value, double bound) {
  return value <= bound + kThresholdSlack * std::max(1.0, std::abs(bound));
}

struct LqrResult {
  MatrixXd K;
  MatrixXd P;
  int sweeps = 0;
};

inline MatrixXd dare_residual(const MatrixXd& A, const MatrixXd& B,
                              const MatrixXd& Qw, const MatrixXd& Rw,
                              const MatrixXd& P) {
  const MatrixXd BtP = B.transpose() * P;
  const MatrixXd S = Rw + BtP * B;
  return A.transpose() * P * A -
         A.transpose() * BtP.transpose() * S.ldlt().solve(BtP * A) + Qw - P;
}

/// Fixed-point Riccati iteration from P_0 = Qw.
inline LqrResult gain_lqr(const MatrixXd& A, const MatrixXd& B,
                          const MatrixXd& Qw, const MatrixXd& Rw,
                          int max_sweeps = 10000) {
  const auto n = A.rows(), m = B.cols();
  if (A.cols() != n || B.rows() != n || Qw.rows() != n || Qw.cols() != n ||
      Rw.rows() != m || Rw.cols() != m)
    throw DataError("gain_lqr: inconsistent shapes");
  if (!is_positive_definite(Qw) || !is_positive_definite(Rw))
    throw DataError("gain_lqr: weights must be symmetric positive definite");
  LqrResult out;
  MatrixXd P = Qw;
  bool converged = false;
  for (int k = 1; k <= max_sweeps; ++k) {
    // Closed-loop form of the same map: a sum of PSD terms, so no
    // cancellation when P grows large on strongly unstable plants.
    const MatrixXd BtP = B.transpose() * P;
    const MatrixXd K = -(Rw + BtP * B).ldlt().solve(BtP * A);
    const MatrixXd Acl = A + B * K;
    const MatrixXd next = symmetrized(Qw + K.transpose() * Rw * K + Acl.transpose() * P * Acl);
    const double change = (next - P).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    P = std::move(next);
    out.sweeps = k;
    if (!P.allFinite()) break;
    if (change <= 1e-12 * scale) {
      converged = true;
      break;
    }
  }
  const double pn = P.allFinite() ? P.cwiseAbs().maxCoeff() : 0.0;
  if (!converged ||
      dare_residual(A, B, Qw, Rw, P).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, pn))
    throw SynthesisFailure(FailureReason::kRiccati, "riccati",
                           "Riccati iteration did not converge", out.sweeps);
  const MatrixXd BtP = B.transpose() * P;
  out.K = -(Rw + BtP * B).ldlt().solve(BtP * A);
  out.P = P;
  if (!(spectral_radius(A + B * out.K) < 1.0))
    throw SynthesisFailure(FailureReason::kRiccati, "riccati",
                           "LQR gain is not stabilizing", out.sweeps);
  return out;
}

/// α_Ns = max_i σ_W((A_K^Ns)ᵀ e_i); one LP per row of W.
inline double contraction_of_power(const MatrixXd& power, const HPolyhedron& W,
                                   const SolverSettings& st = {}) {
  double a = 0.0;
  for (int i = 0; i < W.rows(); ++i) {
    const auto s = support_polytope(W, power.transpose() * W.normals.row(i).transpose(), st);
    if (!s.bounded) throw DataError("contraction: W is unbounded");
    a = std::max(a, s.value);
  }
  return a;
}

inline double compute_contraction(const MatrixXd& A_K, const HPolyhedron& W,
                                  int Ns, const SolverSettings& st = {}) {
  if (Ns < 0) throw DataError("contraction: Ns must be >= 0");
  if (Ns == 0) return 1.0;
  return contraction_of_power(matrix_power(A_K, Ns), W, st);
}

/// max_j Σ_{k<Ns} σ_W(±(A_K^k)ᵀ e_j): the ∞-norm radius of (1-α)·S.
inline double box_radius_sum(const std::vector<MatrixXd>& powers,
                             const HPolyhedron& W,
                             const SolverSettings& st = {}) {
  const int n = W.dim();
  double worst = 0.0;
  for (int j = 0; j < n; ++j)
    for (double sign : {1.0, -1.0}) {
      double sum = 0.0;
      for (const auto& M : powers)
        sum += support_polytope(W, sign * M.row(j).transpose(), st).value;
      worst = std::max(worst, sum);
    }
  return worst;
}

struct NSResult {
  int N_S = 0;
  double alpha = 1.0;
  int steps = 0;
};

/// Smallest N_S with α_{N_S} <= alpha_target (and, with epsilon_rpi set,
/// α S ⊆ ε B∞). Incremental from N_S = 1 on a running power.
inline NSResult find_NS(const MatrixXd& A_K, const HPolyhedron& W,
                        const SynthesisOptions& opts,
                        const SolverSettings& st = {}) {
  NSResult out;
  MatrixXd power = A_K;
  MatrixXd last = MatrixXd::Identity(A_K.rows(), A_K.cols());  // A_K^{Ns-1}
  // Running row-wise sums Σ_{k<Ns} σ_W(±(A_K^k)ᵀ e_j), only for ε-RPI.
  VectorXd plus, minus;
  if (opts.epsilon_rpi) {
    plus = VectorXd::Zero(A_K.rows());
    minus = VectorXd::Zero(A_K.rows());
  }
  for (int Ns = 1; Ns <= opts.max_NS; ++Ns) {
    out.steps = Ns;
    if (opts.epsilon_rpi) {
      for (Eigen::Index j = 0; j < A_K.rows(); ++j) {
        plus(j) += support_polytope(W, last.row(j).transpose(), st).value;
        minus(j) += support_polytope(W, -last.row(j).transpose(), st).value;
      }
    }
    const double a = contraction_of_power(power, W, st);
    bool ok = a < 1.0 && at_most(a, opts.alpha_target);
    if (ok && opts.epsilon_rpi) {
      const double radius = std::max(plus.maxCoeff(), minus.maxCoeff());
      ok = at_most(a / (1.0 - a) * radius, *opts.epsilon_rpi);
    }
    if (ok) {
      out.N_S = Ns;
      out.alpha = a;
      return out;
    }
    last = power;
    power = A_K * power;
  }
  throw SynthesisFailure(FailureReason::kContractionCap, "contraction",
                         "no N_S <= " + std::to_string(opts.max_NS) +
                             " meets the contraction target",
                         opts.max_NS);
}

/// η_i = c_i + K_Sᵀ d_i for every stage row.
inline MatrixXd tightening_directions(const ProblemSpec& spec,
                                      const MatrixXd& K_S) {
  return (spec.C() + spec.D() * K_S).transpose();  // n x p
}

/// f_i = σ_S(η_i) via the running iteration
///   f_{k+1,i} = f_{k,i} + (1-α)⁻¹ σ_W((A_K^k)ᵀ η_i),
/// carrying (A_K^k)ᵀ η_i forward. `partial` (if given) receives f_{k,i} for
/// k = 0..N_S as columns.
inline VectorXd compute_tightenings(const ImplicitRPISet& S,
                                    const MatrixXd& eta,
                                    const SolverSettings& st = {},
                                    MatrixXd* partial = nullptr) {
  if (eta.rows() != S.n()) throw DataError("tightening: directions must be n x p");
  const int p = static_cast<int>(eta.cols());
  VectorXd f = VectorXd::Zero(p);
  MatrixXd dirs = eta;
  if (partial) *partial = MatrixXd::Zero(p, S.N_S() + 1);
  const MatrixXd AKt = S.A_K().transpose();
  for (int k = 0; k < S.N_S(); ++k) {
    for (int i = 0; i < p; ++i) {
      const auto s = support_polytope(S.W(), dirs.col(i), st);
      if (!s.bounded) throw DataError("tightening: W is unbounded");
      f(i) += S.scale() * s.value;
    }
    if (partial) partial->col(k + 1) = f;
    dirs = AKt * dirs;
  }
  return f;
}

/// Same quantity by the closed formula, one support_S call per row.
inline VectorXd compute_tightenings_batch(const ImplicitRPISet& S,
                                          const MatrixXd& eta,
                                          const SolverSettings& st = {}) {
  if (eta.rows() != S.n()) throw DataError("tightening: directions must be n x p");
  VectorXd f(eta.cols());
  for (Eigen::Index i = 0; i < eta.cols(); ++i)
    f(i) = support_S(S, eta.col(i), st);
  return f;
}

inline VectorXd compute_tightenings(const ImplicitRPISet& S,
                                    const ProblemSpec& spec,
                                    const SolverSettings& st = {}) {
  return compute_tightenings(S, tightening_directions(spec, S.K_S()), st);
}

inline VectorXd compute_tightenings_batch(const ImplicitRPISet& S,
                                          const ProblemSpec& spec,
                                          const SolverSettings& st = {}) {
  return compute_tightenings_batch(S, tightening_directions(spec, S.K_S()), st);
}

inline void check_admissible(const VectorXd& f) {
  std::vector<int> bad;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (!(f(i) < 1.0)) bad.push_back(static_cast<int>(i));
  if (!bad.empty())
    throw SynthesisFailure(FailureReason::kAdmissibility, "tightening",
                           "tightened stage constraints are empty (max f = " +
                               std::to_string(f.maxCoeff()) + ")",
                           0, bad);
}

inline MatrixXd lyapunov_residual(const MatrixXd& A, const MatrixXd& B,
                                  const MatrixXd& K_Z, const MatrixXd& P,
                                  const MatrixXd& Qw, const MatrixXd& Rw) {
  const MatrixXd AZ = A + B * K_Z;
  return AZ.transpose() * P * AZ - P + Qw + K_Z.transpose() * Rw * K_Z;
}

/// A_ZᵀPA_Z - P + Qw + K_ZᵀRwK_Z ≼ 0 (to 1e-8·‖P‖) and P ≻ 0.
inline bool verify_terminal_cost(const MatrixXd& A, const MatrixXd& B,
                                 const MatrixXd& K_Z, const MatrixXd& P,
                                 const MatrixXd& Qw, const MatrixXd& Rw) {
  if (!is_positive_definite(Qw))
    throw DataError("terminal cost: Q must be symmetric positive definite");
  if (!is_positive_definite(Rw))
    throw DataError("terminal cost: R must be symmetric positive definite");
  if (P.rows() != A.rows() || P.cols() != A.rows() || K_Z.rows() != B.cols() ||
      K_Z.cols() != A.rows())
    throw DataError("terminal cost: inconsistent shapes");
  if (!is_positive_definite(P)) return false;
  const double pn = P.cwiseAbs().maxCoeff();
  return max_eigenvalue(lyapunov_residual(A, B, K_Z, P, Qw, Rw)) <= 1e-8 * std::max(1.0, pn);
}

struct NZResult {
  int N_Z = 0;
  int candidates = 0;
  VectorXd margins;  // 1 - f_i - g_i at the accepted N_Z (inf for ψ_i = 0)
};

/// Terminal condition for one candidate N_Z. Returns per-row margins
/// (1 - f_i) - g_i; -inf where the support is unbounded. Stops at the first
/// failing row unless `all_rows`.
inline VectorXd terminal_margins(const ImplicitTerminalSet& T, NZMode mode,
                                 const SolverSettings& st = {},
                                 bool all_rows = false) {
  const int p = T.ZS().rows();
  VectorXd margins = VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  const MatrixXd Pn = matrix_power(T.A_Z(), T.N_Z() + 1).transpose();
  for (int i = 0; i < p; ++i) {
    const VectorXd psi = Pn * T.ZS().normals.row(i).transpose();
    const SupportValue g = mode == NZMode::kExact
                               ? support_terminal_intersection(T, psi, st)
                               : support_polytope(T.ZS(), psi, st);
    margins(i) = g.bounded ? T.ZS().offsets(i) - g.value
                           : -std::numeric_limits<double>::infinity();
    if (!all_rows && !(margins(i) >= -kThresholdSlack)) break;
  }
  return margins;
}

inline bool terminal_condition_holds(const VectorXd& margins) {
  for (Eigen::Index i = 0; i < margins.size(); ++i)
    if (!(margins(i) >= -kThresholdSlack)) return false;
  return true;
}

/// Smallest N_Z in [0, max_NZ] passing the chosen certificate.
inline NZResult find_NZ(const ImplicitTerminalSet& T0, NZMode mode, int max_NZ,
                        const SolverSettings& st = {}) {
  NZResult out;
  for (int nz = 0; nz <= max_NZ; ++nz) {
    out.candidates = nz + 1;
    const VectorXd m = terminal_margins(T0.with_horizon(nz), mode, st);
    if (terminal_condition_holds(m)) {
      out.N_Z = nz;
      out.margins = m;
      return out;
    }
  }
  throw SynthesisFailure(FailureReason::kTerminalCap, "terminal",
                         "no N_Z <= " + std::to_string(max_NZ) +
                             " certifies the terminal set",
                         max_NZ);
}

struct TubeDesign {
  ImplicitRPISet S;
  VectorXd f;
  ImplicitTerminalSet terminal;
  MatrixXd P;
  NZMode mode = NZMode::kSufficient;
  json provenance = json::object();

  const MatrixXd& K_S() const { return S.K_S(); }
  const MatrixXd& K_Z() const { return terminal.K_Z(); }
  double alpha() const { return S.alpha(); }
  int N_S() const { return S.N_S(); }
  int N_Z() const { return terminal.N_Z(); }
};

namespace detail {

inline MatrixXd select_KS(const ProblemSpec& spec, json& prov) {
  const auto& src = spec.options.KS_source;
  const int n = spec.n(), m = spec.m();
  switch (src.kind) {
    case GainSource::Kind::kGiven:
      if (src.K.rows() != m || src.K.cols() != n)
        throw DataError("KS_source: K must be m x n");
      prov["KS_source"] = "given";
      return src.K;
    case GainSource::Kind::kLqrWeights: {
      auto r = gain_lqr(spec.plant.A, spec.plant.B, src.Qs, src.Rs);
      prov["KS_source"] = "lqr_weights";
      prov["KS_riccati_sweeps"] = r.sweeps;
      return r.K;
    }
    default: {
      auto r = gain_lqr(spec.plant.A, spec.plant.B, MatrixXd::Identity(n, n),
                        MatrixXd::Identity(m, m));
      prov["KS_source"] = "lqr_identity";
      prov["KS_riccati_sweeps"] = r.sweeps;
      return r.K;
    }
  }
}

class StageClock {
 public:
  StageClock() : t0_(std::chrono::steady_clock::now()), lp0_(lp_counter()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }
  long lps() const { return lp_counter() - lp0_; }

 private:
  std::chrono::steady_clock::time_point t0_;
  long lp0_;
};

}  // namespace detail

/// Full offline design. Any failing stage raises SynthesisFailure carrying
/// the stage name; validation failures never reach the N_S search.
inline TubeDesign design(const ProblemSpec& spec, const SolverSettings& st = {}) {
  spec.check();
  json prov = json::object();
  prov["options"] = options_to_json(spec.options);
  json stages = json::object();
  auto record = [&](const char* name, const detail::StageClock& c) {
    stages[name] = {{"seconds", c.seconds()}, {"lps", c.lps()}};
  };

  {
    detail::StageClock c;
    const auto rep = validate_problem(spec, st);
    record("validation", c);
    if (!rep.pass) {
      std::string msg = "problem data fails validation";
      for (const auto& s : rep.issues) msg += "; " + s;
      throw SynthesisFailure(FailureReason::kValidation, "validation", msg);
    }
  }

  const int n = spec.n();
  detail::StageClock c_ks;
  const MatrixXd K_S = detail::select_KS(spec, prov);
  const MatrixXd A_K = spec.plant.A + spec.plant.B * K_S;
  const double rho_K = spectral_radius(A_K);
  if (!(rho_K < 1.0 - 1e-9))
    throw SynthesisFailure(FailureReason::kValidation, "KS",
                           "A + B K_S is not strictly stable");
  record("KS", c_ks);

  detail::StageClock c_ns;
  const NSResult ns = find_NS(A_K, spec.W, spec.options, st);
  record("NS", c_ns);
  prov["NS_steps"] = ns.steps;

  ImplicitRPISet S(A_K, K_S, spec.W, ns.alpha, ns.N_S);
  detail::StageClock c_f;
  const VectorXd f = compute_tightenings(S, spec, st);
  record("tightening", c_f);
  check_admissible(f);

  detail::StageClock c_kz;
  MatrixXd K_Z, P;
  const auto& kz = spec.options.KZ_source;
  if (kz.kind == GainSource::Kind::kGiven) {
    if (kz.K.rows() != spec.m() || kz.K.cols() != n || kz.P.rows() != n ||
        kz.P.cols() != n)
      throw DataError("KZ_source: K must be m x n and P n x n");
    K_Z = kz.K;
    P = kz.P;
    prov["KZ_source"] = "given";
  } else {
    auto r = gain_lqr(spec.plant.A, spec.plant.B, spec.weights.Q, spec.weights.R);
    K_Z = r.K;
    P = r.P;
    prov["KZ_source"] = "lqr_cost_weights";
    prov["KZ_riccati_sweeps"] = r.sweeps;
  }
  const MatrixXd A_Z = spec.plant.A + spec.plant.B * K_Z;
  if (!(spectral_radius(A_Z) < 1.0 - 1e-9))
    throw SynthesisFailure(FailureReason::kTerminalCost, "terminal_cost",
                           "A + B K_Z is not strictly stable");
  if (!verify_terminal_cost(spec.plant.A, spec.plant.B, K_Z, P, spec.weights.Q,
                            spec.weights.R))
    throw SynthesisFailure(FailureReason::kTerminalCost, "terminal_cost",
                           "terminal cost does not dominate the stage cost");
  record("terminal_cost", c_kz);

  detail::StageClock c_nz;
  ImplicitTerminalSet T0(A_Z, K_Z, build_ZS(spec, K_Z, f), 0);
  const NZResult nz = find_NZ(T0, spec.options.NZ_mode, spec.options.max_NZ, st);
  record("NZ", c_nz);
  prov["NZ_candidates"] = nz.candidates;
  prov["stages"] = stages;

  TubeDesign d{std::move(S), f, T0.with_horizon(nz.N_Z), P,
               spec.options.NZ_mode, std::move(prov)};
  return d;
}

// ---------------------------------------------------------------------------
// Certificates and serialization

struct Certificate {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
};

struct CertificateReport {
  std::vector<Certificate> items;
  bool pass() const {
    for (const auto& c : items)
      if (!c.pass) return false;
    return true;
  }
  json to_json() const {
    json arr = json::array();
    for (const auto& c : items)
      arr.push_back({{"name", c.name},
                     {"pass", c.pass},
                     {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
                     {"bound", c.bound}});
    return {{"pass", pass()}, {"checks", arr}};
  }
};

/// Re-runs every design certificate from scratch.
inline CertificateReport certify_design(const TubeDesign& d,
                                        const ProblemSpec& spec,
                                        const SolverSettings& st = {}) {
  CertificateReport rep;
  const double rhoK = spectral_radius(d.S.A_K());
  rep.items.push_back({"stable_A_K", rhoK < 1.0 - 1e-9, rhoK, 1.0});
  const double a = compute_contraction(d.S.A_K(), d.S.W(), d.N_S(), st);
  rep.items.push_back({"contraction", at_most(a, d.alpha()) && d.alpha() < 1.0, a,
                       d.alpha()});
  const VectorXd f = compute_tightenings_batch(d.S, spec, st);
  const double f_gap = (f - d.f).maxCoeff();
  rep.items.push_back({"tightening_sound", f_gap <= 1e-9, f_gap, 1e-9});
  rep.items.push_back({"admissibility", d.f.maxCoeff() < 1.0, d.f.maxCoeff(), 1.0});
  const double rhoZ = spectral_radius(d.terminal.A_Z());
  rep.items.push_back({"stable_A_Z", rhoZ < 1.0 - 1e-9, rhoZ, 1.0});
  const MatrixXd L = lyapunov_residual(spec.plant.A, spec.plant.B, d.K_Z(), d.P,
                                       spec.weights.Q, spec.weights.R);
  const double lmax = max_eigenvalue(L);
  const bool p_pd = is_positive_definite(d.P);
  rep.items.push_back({"terminal_cost", p_pd && lmax <= 1e-8 * std::max(1.0, d.P.cwiseAbs().maxCoeff()),
                       lmax, 1e-8});
  const ImplicitTerminalSet T(d.terminal.A_Z(), d.K_Z(), build_ZS(spec, d.K_Z(), d.f),
                              d.N_Z());
  if (spec.options.epsilon_rpi) {
    std::vector<MatrixXd> powers;
    for (int j = 0; j < d.N_S(); ++j) powers.push_back(d.S.power(j));
    const double r = d.alpha() / (1.0 - d.alpha()) * box_radius_sum(powers, d.S.W(), st);
    rep.items.push_back({"epsilon_rpi", at_most(r, *spec.options.epsilon_rpi), r,
                         *spec.options.epsilon_rpi});
  }
  const VectorXd margins = terminal_margins(T, d.mode, st, true);
  rep.items.push_back({std::string("terminal_") + to_string(d.mode),
                       terminal_condition_holds(margins), margins.minCoeff(), 0.0});
  return rep;
}

inline json design_to_json(const TubeDesign& d) {
  return {{"K_S", to_json_matrix(d.K_S())},
          {"alpha", d.alpha()},
          {"N_S", d.N_S()},
          {"f", to_json_vector(d.f)},
          {"K_Z", to_json_matrix(d.K_Z())},
          {"P", to_json_matrix(d.P)},
          {"N_Z", d.N_Z()},
          {"mode", to_string(d.mode)},
          {"provenance", d.provenance}};
}

/// Rebuilds a design against its problem; certificates are re-verified and
/// a failing one raises SynthesisFailure.
inline TubeDesign design_from_json(const json& j, const ProblemSpec& spec,
                                   const SolverSettings& st = {},
                                   bool verify = true) {
  const int n = spec.n(), m = spec.m();
  const MatrixXd K_S = json_matrix(json_require(j, "K_S", ""), "/K_S");
  const MatrixXd K_Z = json_matrix(json_require(j, "K_Z", ""), "/K_Z");
  const MatrixXd P = json_matrix(json_require(j, "P", ""), "/P");
  if (K_S.rows() != m || K_S.cols() != n) throw DataError("/K_S: must be m x n");
  if (K_Z.rows() != m || K_Z.cols() != n) throw DataError("/K_Z: must be m x n");
  if (P.rows() != n || P.cols() != n) throw DataError("/P: must be n x n");
  const double alpha = json_number(json_require(j, "alpha", ""), "/alpha");
  const json& jns = json_require(j, "N_S", "");
  const json& jnz = json_require(j, "N_Z", "");
  if (!jns.is_number_integer()) throw DataError("/N_S: expected an integer");
  if (!jnz.is_number_integer()) throw DataError("/N_Z: expected an integer");
  const VectorXd f = json_vector(json_require(j, "f", ""), "/f");
  if (f.size() != spec.Y.rows()) throw DataError("/f: length must equal rows of Y");
  NZMode mode = NZMode::kSufficient;
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw DataError("/mode: expected a string");
    mode = parse_nz_mode(j["mode"].get<std::string>());
  }
  const MatrixXd A_K = spec.plant.A + spec.plant.B * K_S;
  const MatrixXd A_Z = spec.plant.A + spec.plant.B * K_Z;
  if (!(f.maxCoeff() < 1.0))
    throw SynthesisFailure(FailureReason::kAdmissibility, "load",
                           "stored tightenings are not admissible");
  TubeDesign d{ImplicitRPISet(A_K, K_S, spec.W, alpha, jns.get<int>()), f,
               ImplicitTerminalSet(A_Z, K_Z, build_ZS(spec, K_Z, f), jnz.get<int>()),
               P, mode, j.value("provenance", json::object())};
  if (verify) {
    const auto rep = certify_design(d, spec, st);
    if (!rep.pass()) {
      std::string msg = "design certificates fail:";
      for (const auto& c : rep.items)
        if (!c.pass) msg += " " + c.name;
      throw SynthesisFailure(FailureReason::kValidation, "load", msg);
    }
  }
  return d;
}

}  // namespace irtmpc
