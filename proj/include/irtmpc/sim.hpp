#pragma once

// Closed-loop simulation x⁺ = A x + B κ(x) + w with seeded disturbances.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "irtmpc/controller.hpp"
#include "irtmpc/errors.hpp"
#include "irtmpc/linalg.hpp"
#include "irtmpc/model.hpp"
#include "irtmpc/setcalc.hpp"

namespace irtmpc {

enum class DisturbanceMode { kZero, kExtremeVertex, kUniformBox, kCustomSequence };

inline const char* to_string(DisturbanceMode m) {
  switch (m) {
    case DisturbanceMode::kZero: return "zero";
    case DisturbanceMode::kExtremeVertex: return "extreme_vertex";
    case DisturbanceMode::kUniformBox: return "uniform_box";
    case DisturbanceMode::kCustomSequence: return "custom_sequence";
  }
  return "unknown";
}

inline DisturbanceMode parse_disturbance_mode(const std::string& s) {
  if (s == "zero") return DisturbanceMode::kZero;
  if (s == "extreme" || s == "extreme_vertex") return DisturbanceMode::kExtremeVertex;
  if (s == "uniform" || s == "uniform_box") return DisturbanceMode::kUniformBox;
  if (s == "custom" || s == "custom_sequence") return DisturbanceMode::kCustomSequence;
  throw DataError("unknown disturbance mode \"" + s + "\"");
}

struct DisturbancePolicy {
  DisturbanceMode mode = DisturbanceMode::kZero;
  std::uint64_t seed = 0;
  std::vector<VectorXd> sequence;
};

/// Pulls w toward the origin until every row of W holds with no tolerance.
/// W contains the origin, so the loop ends after a few ulps at most.
inline VectorXd scale_into(const HPolyhedron& W, VectorXd w) {
  for (int guard = 0; guard < 64; ++guard) {
    const double r = (W.normals * w).cwiseQuotient(W.offsets).maxCoeff();
    if (r <= 1.0) return w;
    w /= r;
    w *= 1.0 - 1e-16 * (1 << std::min(guard, 20));
  }
  return VectorXd::Zero(w.size());
}

/// Stateful sampler; caches the bounding box used by uniform_box.
class DisturbanceSampler {
 public:
  DisturbanceSampler(HPolyhedron W, DisturbancePolicy policy,
                     SolverSettings st = {})
      : W_(std::move(W)), policy_(std::move(policy)), st_(std::move(st)) {}

  const DisturbancePolicy& policy() const { return policy_; }

  VectorXd operator()(int k) {
    const int n = W_.dim();
    switch (policy_.mode) {
      case DisturbanceMode::kZero:
        return VectorXd::Zero(n);
      case DisturbanceMode::kCustomSequence:
        if (k < 0 || k >= static_cast<int>(policy_.sequence.size()))
          throw DataError("disturbance sequence exhausted at step " + std::to_string(k));
        if (policy_.sequence[k].size() != n)
          throw DataError("disturbance sequence entry " + std::to_string(k) +
                          " has wrong size");
        return policy_.sequence[k];
      case DisturbanceMode::kExtremeVertex: {
        Rng rng(derive_seed(policy_.seed, static_cast<std::uint64_t>(k), 1));
        VectorXd dir = rng.normal_vector(n);
        while (dir.norm() == 0.0) dir = rng.normal_vector(n);
        return extreme_point(dir);
      }
      case DisturbanceMode::kUniformBox: {
        if (lo_.size() == 0) bounding_box();
        Rng rng(derive_seed(policy_.seed, static_cast<std::uint64_t>(k), 2));
        VectorXd w(n);
        for (long draw = 0; draw < 1000000; ++draw) {
          for (int i = 0; i < n; ++i) w(i) = rng.uniform(lo_(i), hi_(i));
          if (W_.contains(w)) return w;
        }
        throw DataError("uniform_box: no sample accepted after 1e6 draws");
      }
    }
    return VectorXd::Zero(n);
  }

  /// Maximizer of dirᵀw over W, pulled exactly inside W.
  VectorXd extreme_point(const VectorXd& dir) const {
    const auto s = support_polytope(W_, dir, st_);
    if (!s.bounded) throw DataError("disturbance set is unbounded");
    return scale_into(W_, s.maximizer);
  }

 private:
  void bounding_box() {
    const int n = W_.dim();
    lo_.resize(n);
    hi_.resize(n);
    for (int i = 0; i < n; ++i) {
      VectorXd e = VectorXd::Zero(n);
      e(i) = 1.0;
      const auto up = support_polytope(W_, e, st_);
      const auto dn = support_polytope(W_, -e, st_);
      if (!up.bounded || !dn.bounded) throw DataError("disturbance set is unbounded");
      hi_(i) = up.value;
      lo_(i) = -dn.value;
    }
  }

  HPolyhedron W_;
  DisturbancePolicy policy_;
  SolverSettings st_;
  VectorXd lo_, hi_;
};

/// One-shot sample; deterministic in (policy.seed, k).
inline VectorXd sample_disturbance(const HPolyhedron& W,
                                   const DisturbancePolicy& policy, int k,
                                   const SolverSettings& st = {}) {
  DisturbanceSampler s(W, policy, st);
  return s(k);
}

/// The single plant update used by simulation and replay.
inline VectorXd plant_update(const Plant& plant, const VectorXd& x,
                             const VectorXd& u, const VectorXd& w) {
  VectorXd next = plant.A * x;
  next.noalias() += plant.B * u;
  next += w;
  return next;
}

struct StepRecord {
  int k = 0;
  VectorXd x, u, w, z0, v0;
  double value = 0.0;
  int iters = 0;
};

struct ClosedLoopTrace {
  std::vector<StepRecord> steps;
  VectorXd final_state;
  double final_value = std::numeric_limits<double>::quiet_NaN();
  bool aborted = false;
  int abort_step = -1;
  std::string abort_reason;
  json metadata = json::object();
};

/// Y-row violation above which the simulator aborts. The tightened QP puts
/// (x, u) inside Y up to solver accuracy.
inline double y_violation_tolerance(const SolverSettings& st) {
  return 10.0 * st.feas_tol;
}

/// Runs `steps` controller updates from x0. NotInDomain at x0 propagates;
/// any later infeasibility or Y violation ends the run with a partial trace.
inline ClosedLoopTrace simulate(const TubeDesign& d, const ProblemSpec& spec,
                                const VectorXd& x0, int steps,
                                const DisturbancePolicy& policy,
                                const SolverSettings& st = {}) {
  if (x0.size() != spec.n()) throw DataError("simulate: x0 has wrong size");
  if (steps < 0) throw DataError("simulate: steps must be >= 0");
  ClosedLoopTrace tr;
  tr.metadata = {{"policy", to_string(policy.mode)},
                 {"seed", policy.seed},
                 {"steps", steps},
                 {"x0", to_json_vector(x0)}};
  DisturbanceSampler sampler(spec.W, policy, st);
  VectorXd x = x0;
  const double ytol = y_violation_tolerance(st);
  for (int k = 0; k < steps; ++k) {
    StepResult s;
    try {
      s = mpc_step(d, spec, x, st);
    } catch (const NotInDomain& e) {
      if (k == 0) throw;
      tr.aborted = true;
      tr.abort_step = k;
      tr.abort_reason = std::string("not in domain: ") + e.what();
      tr.final_state = x;
      return tr;
    }
    StepRecord r;
    r.k = k;
    r.x = x;
    r.u = s.u;
    r.w = sampler(k);
    r.z0 = s.diag.z0;
    r.v0 = s.diag.v0;
    r.value = s.diag.value;
    r.iters = s.diag.iterations;
    tr.steps.push_back(r);
    if (s.diag.y_violation > ytol) {
      tr.aborted = true;
      tr.abort_step = k;
      tr.abort_reason = "stage constraint violated by " + std::to_string(s.diag.y_violation);
      tr.final_state = x;
      return tr;
    }
    x = plant_update(spec.plant, x, r.u, r.w);
  }
  tr.final_state = x;
  try {
    const OcpSolution s = solve_ocp(assemble_qp(d, spec, x), st);
    if (s.optimal()) {
      tr.final_value = s.value;
    } else {
      tr.aborted = true;
      tr.abort_step = steps;
      tr.abort_reason = "not in domain at the final state";
    }
  } catch (const NumericalFailure&) {
    // final value is informative only
  }
  return tr;
}

struct DecreaseReport {
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<int> violations;
};

/// value_{k+1} <= value_k - λ_min(Q)·‖z0_k‖² + tol at every recorded step
/// (the last step uses final_value when it is known).
inline DecreaseReport check_decrease(const ClosedLoopTrace& tr, const MatrixXd& Q,
                                     double tol = 1e-6) {
  DecreaseReport rep;
  const double beta = min_eigenvalue(Q);
  for (std::size_t k = 0; k < tr.steps.size(); ++k) {
    double next;
    if (k + 1 < tr.steps.size())
      next = tr.steps[k + 1].value;
    else if (std::isfinite(tr.final_value))
      next = tr.final_value;
    else
      break;
    const auto& s = tr.steps[k];
    const double margin = s.value - beta * s.z0.squaredNorm() + tol - next;
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < 0.0) {
      rep.pass = false;
      rep.violations.push_back(static_cast<int>(k));
    }
  }
  if (!std::isfinite(rep.worst_margin)) rep.worst_margin = 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Output

inline std::string trace_csv(const ClosedLoopTrace& tr) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (tr.steps.empty()) {
    os << "k,value,iters\n";
    return os.str();
  }
  const auto n = tr.steps.front().x.size(), m = tr.steps.front().u.size();
  os << "k";
  auto cols = [&](const char* name, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) os << "," << name << "[" << i << "]";
  };
  cols("x", n);
  cols("u", m);
  cols("w", n);
  cols("z0", n);
  cols("v0", m);
  os << ",value,iters\n";
  for (const auto& s : tr.steps) {
    os << s.k;
    for (const VectorXd* v : {&s.x, &s.u, &s.w, &s.z0, &s.v0})
      for (Eigen::Index i = 0; i < v->size(); ++i) os << "," << (*v)(i);
    os << "," << s.value << "," << s.iters << "\n";
  }
  return os.str();
}

/// ‖z0_k‖ and ‖v0_k‖ against k on a log axis. Exact zeros are drawn at the
/// bottom of the axis.
inline std::string trace_svg(const ClosedLoopTrace& tr) {
  const double W = 640, H = 400, L = 70, R = 20, T = 30, B = 50;
  std::vector<double> zs, vs;
  for (const auto& s : tr.steps) {
    zs.push_back(s.z0.norm());
    vs.push_back(s.v0.norm());
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto* series : {&zs, &vs})
    for (double v : *series)
      if (v > 0.0) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!(hi > 0.0)) {
    lo = 1e-12;
    hi = 1.0;
  }
  double dlo = std::floor(std::log10(lo)), dhi = std::ceil(std::log10(hi));
  dlo = std::max(dlo, -16.0);
  if (dhi <= dlo) dhi = dlo + 1.0;
  const int K = std::max<int>(1, static_cast<int>(tr.steps.size()) - 1);
  auto px = [&](int k) { return L + (W - L - R) * k / K; };
  auto py = [&](double v) {
    const double lv = v > 0.0 ? std::max(std::log10(v), dlo) : dlo;
    return T + (H - T - B) * (dhi - lv) / (dhi - dlo);
  };
  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int e = static_cast<int>(dlo); e <= static_cast<int>(dhi); ++e) {
    const double y = py(std::pow(10.0, e));
    os << "<line x1=\"" << L << "\" y1=\"" << y << "\" x2=\"" << W - R << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e
       << "</text>\n";
  }
  for (int k = 0; k <= K; k += std::max(1, K / 10)) {
    os << "<text x=\"" << px(k) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << k << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\">k</text>\n";
  os << "</g>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
     << H - T - B << "\" fill=\"none\" stroke=\"#333\"/>\n";
  auto series = [&](const std::vector<double>& v, const char* id, const char* colour) {
    os << "<polyline id=\"" << id << "\" class=\"series\" fill=\"none\" stroke=\"" << colour
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < v.size(); ++k)
      os << (k ? " " : "") << px(static_cast<int>(k)) << "," << py(v[k]);
    os << "\"/>\n";
  };
  series(zs, "z0_norm", "#1f77b4");
  series(vs, "v0_norm", "#d62728");
  os << "<g font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<text x=\"" << W - R - 90 << "\" y=\"" << T + 16 << "\" fill=\"#1f77b4\">|z0_k|</text>\n"
     << "<text x=\"" << W - R - 90 << "\" y=\"" << T + 32 << "\" fill=\"#d62728\">|v0_k|</text>\n"
     << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace irtmpc
