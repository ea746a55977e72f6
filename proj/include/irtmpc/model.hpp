#pragma once

// Problem data: plant, polyhedral sets, cost weights, synthesis options and
// the problem file reader, plus the standing-assumption checks.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cctype>
#include <complex>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "irtmpc/errors.hpp"
#include "irtmpc/json_eigen.hpp"
#include "irtmpc/linalg.hpp"
#include "irtmpc/solver.hpp"

namespace irtmpc {

struct Plant {
  MatrixXd A;
  MatrixXd B;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  void check() const {
    if (A.rows() < 1 || A.rows() != A.cols())
      throw DataError("plant: A must be square with n >= 1");
    if (B.rows() != A.rows() || B.cols() < 1)
      throw DataError("plant: B must be n x m with m >= 1");
    if (!A.allFinite() || !B.allFinite())
      throw DataError("plant: non-finite entries");
  }
};

/// {p : normals.row(i) p <= offsets(i)}.
struct HPolyhedron {
  MatrixXd normals;
  VectorXd offsets;

  HPolyhedron() = default;
  HPolyhedron(MatrixXd a, VectorXd b)
      : normals(std::move(a)), offsets(std::move(b)) {
    if (normals.rows() != offsets.size())
      throw DataError("polyhedron: normals/offsets row count mismatch");
    if (!normals.allFinite() || !offsets.allFinite())
      throw DataError("polyhedron: non-finite entries");
  }

  /// Offset-1 form {p : a p <= 1}.
  static HPolyhedron unit_offsets(MatrixXd a) {
    VectorXd b = VectorXd::Ones(a.rows());
    return HPolyhedron(std::move(a), std::move(b));
  }

  /// Divides each row by its offset; offsets must be positive.
  static HPolyhedron normalized(const MatrixXd& a, const VectorXd& b) {
    if (a.rows() != b.size())
      throw DataError("polyhedron: normals/offsets row count mismatch");
    MatrixXd out = a;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      if (!(b(i) > 0.0))
        throw DataError("polyhedron: row " + std::to_string(i) +
                        " has non-positive offset");
      out.row(i) /= b(i);
    }
    return unit_offsets(std::move(out));
  }

  /// r * unit infinity-norm ball in R^dim.
  static HPolyhedron box(int dim, double r = 1.0) {
    MatrixXd a(2 * dim, dim);
    a << MatrixXd::Identity(dim, dim) / r, -MatrixXd::Identity(dim, dim) / r;
    return unit_offsets(std::move(a));
  }

  int dim() const { return static_cast<int>(normals.cols()); }
  int rows() const { return static_cast<int>(normals.rows()); }

  bool contains(const VectorXd& p, double tol = 0.0) const {
    return rows() == 0 || (normals * p - offsets).maxCoeff() <= tol;
  }
};

/// Cartesian product of state and input boxes, r_x B∞ⁿ × r_u B∞ᵐ, as an
/// offset-1 stage-constraint set in R^{n+m}.
inline HPolyhedron box_stage_set(int n, int m, double rx, double ru) {
  MatrixXd a = MatrixXd::Zero(2 * (n + m), n + m);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 1.0 / rx;
    a(n + i, i) = -1.0 / rx;
  }
  for (int j = 0; j < m; ++j) {
    a(2 * n + j, n + j) = 1.0 / ru;
    a(2 * n + m + j, n + j) = -1.0 / ru;
  }
  return HPolyhedron::unit_offsets(std::move(a));
}

struct CostWeights {
  MatrixXd Q;
  MatrixXd R;
};

enum class NZMode { kExact, kSufficient };

inline const char* to_string(NZMode m) {
  return m == NZMode::kExact ? "exact" : "sufficient";
}

inline NZMode parse_nz_mode(const std::string& s) {
  if (s == "exact") return NZMode::kExact;
  if (s == "sufficient") return NZMode::kSufficient;
  throw DataError("NZ_mode: expected \"exact\" or \"sufficient\", got \"" +
                  s + "\"");
}

struct GainSource {
  enum class Kind { kLqrIdentity, kLqrWeights, kLqrCostWeights, kGiven };
  Kind kind = Kind::kLqrIdentity;
  MatrixXd Qs, Rs;  // kLqrWeights
  MatrixXd K, P;    // kGiven (P only for the terminal gain)
};

struct SynthesisOptions {
  double alpha_target = 0.5;
  int max_NS = 10000;
  int max_NZ = 10000;
  NZMode NZ_mode = NZMode::kSufficient;
  GainSource KS_source{GainSource::Kind::kLqrIdentity, {}, {}, {}, {}};
  GainSource KZ_source{GainSource::Kind::kLqrCostWeights, {}, {}, {}, {}};
  std::optional<double> epsilon_rpi;

  void check() const {
    if (!(alpha_target > 0.0 && alpha_target < 1.0))
      throw DataError("options/alpha_target: must lie in (0, 1)");
    if (max_NS < 1) throw DataError("options/max_NS: must be >= 1");
    if (max_NZ < 1) throw DataError("options/max_NZ: must be >= 1");
    if (epsilon_rpi && !(*epsilon_rpi > 0.0))
      throw DataError("options/epsilon_rpi: must be > 0");
  }
};

struct ProblemSpec {
  Plant plant;
  HPolyhedron Y;  // rows (c_i, d_i) in R^{n+m}, offsets 1
  HPolyhedron W;  // rows e_i in R^n, offsets 1
  CostWeights weights;
  int N = 1;
  SynthesisOptions options;

  int n() const { return plant.n(); }
  int m() const { return plant.m(); }
  MatrixXd C() const { return Y.normals.leftCols(n()); }
  MatrixXd D() const { return Y.normals.rightCols(m()); }

  void check() const {
    plant.check();
    if (Y.dim() != n() + m()) throw DataError("Y: rows must have n+m entries");
    if (W.dim() != n()) throw DataError("W: rows must have n entries");
    if (Y.rows() < 1) throw DataError("Y: at least one row required");
    if (W.rows() < 1) throw DataError("W: at least one row required");
    if (weights.Q.rows() != n() || weights.Q.cols() != n())
      throw DataError("Q: must be n x n");
    if (weights.R.rows() != m() || weights.R.cols() != m())
      throw DataError("R: must be m x m");
    if (N < 1) throw DataError("N: must be >= 1");
    options.check();
  }
};

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  bool pass = true;
  std::vector<std::string> issues;
  json details = json::object();

  void fail(const std::string& why) {
    pass = false;
    issues.push_back(why);
  }

  json to_json() const {
    return {{"pass", pass}, {"issues", issues}, {"details", details}};
  }
};

/// PBH test on every eigenvalue with |λ| >= 1. Rank is counted from the
/// singular values of [A - λI, B] relative to the largest one.
inline ValidationReport validate_plant(const Plant& plant, double tol = 1e-8) {
  plant.check();
  ValidationReport rep;
  const int n = plant.n(), m = plant.m();
  Eigen::EigenSolver<MatrixXd> es(plant.A, false);
  json modes = json::array();
  for (int k = 0; k < n; ++k) {
    const std::complex<double> lam = es.eigenvalues()(k);
    if (std::abs(lam) < 1.0 - 1e-12) continue;
    Eigen::MatrixXcd M(n, n + m);
    M.leftCols(n) = plant.A.cast<std::complex<double>>();
    M.leftCols(n).diagonal().array() -= lam;
    M.rightCols(m) = plant.B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const VectorXd sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (smax > 0.0 && sv(i) > tol * smax) ++rank;
    const double margin = smax > 0.0 ? sv(n - 1) / smax : 0.0;
    modes.push_back({{"re", lam.real()},
                     {"im", lam.imag()},
                     {"abs", std::abs(lam)},
                     {"rank", rank},
                     {"margin", margin}});
    if (rank < n) {
      std::ostringstream os;
      os << "unstable mode " << lam.real() << (lam.imag() < 0 ? "" : "+")
         << lam.imag() << "i is not controllable (PBH rank " << rank << " < "
         << n << ")";
      rep.fail(os.str());
    }
  }
  rep.details["unstable_modes"] = modes;
  rep.details["spectral_radius"] = spectral_radius(plant.A);
  return rep;
}

enum class SetRole { kStage, kDisturbance };

/// Origin interior (offsets >= tol), boundedness for disturbance sets via
/// 2·dim support LPs, and redundant rows (flagged only).
inline ValidationReport validate_polyhedron(const HPolyhedron& P, SetRole role,
                                            double tol = 1e-8,
                                            const SolverSettings& st = {}) {
  if (P.rows() < 1) throw DataError("polyhedron: no rows");
  for (int i = 0; i < P.rows(); ++i)
    if (P.normals.row(i).cwiseAbs().maxCoeff() == 0.0)
      throw DataError("polyhedron: row " + std::to_string(i) +
                      " has a zero normal");
  ValidationReport rep;
  const int d = P.dim();
  rep.details["rows"] = P.rows();
  rep.details["dim"] = d;
  if (P.offsets.minCoeff() < tol)
    rep.fail("origin is not in the interior (offset below tolerance)");

  if (role == SetRole::kDisturbance) {
    bool bounded = true;
    json sup = json::array();
    for (int k = 0; k < 2 * d; ++k) {
      LinearProgram lp;
      lp.c = VectorXd::Zero(d);
      lp.c(k % d) = k < d ? -1.0 : 1.0;
      lp.Ain = P.normals;
      lp.bin = P.offsets;
      const auto r = solve_lp(lp, st);
      if (r.status == SolveStatus::kOptimal) {
        sup.push_back(-r.objective);
      } else {
        bounded = false;
        sup.push_back(nullptr);
      }
    }
    rep.details["bounded"] = bounded;
    rep.details["coordinate_support"] = sup;
    if (!bounded) rep.fail("disturbance set is unbounded");
  }

  // Row i is redundant when the other rows already imply it.
  std::vector<int> redundant;
  if (P.rows() > 1) {
    for (int i = 0; i < P.rows(); ++i) {
      LinearProgram lp;
      lp.c = -P.normals.row(i).transpose();
      lp.Ain.resize(P.rows() - 1, d);
      lp.bin.resize(P.rows() - 1);
      for (int r = 0, k = 0; r < P.rows(); ++r) {
        if (r == i) continue;
        lp.Ain.row(k) = P.normals.row(r);
        lp.bin(k++) = P.offsets(r);
      }
      const auto r = solve_lp(lp, st);
      if (r.status == SolveStatus::kOptimal &&
          -r.objective <= P.offsets(i) + tol)
        redundant.push_back(i);
    }
  }
  rep.details["redundant_rows"] = redundant;
  return rep;
}

inline ValidationReport validate_weights(const CostWeights& w) {
  ValidationReport rep;
  auto check = [&](const MatrixXd& M, const char* name) {
    if (!M.allFinite()) {
      rep.fail(std::string(name) + " has non-finite entries");
      return;
    }
    if (!is_symmetric(M, 1e-9)) {
      rep.fail(std::string(name) + " is not symmetric");
      return;
    }
    const double lmin = min_eigenvalue(M);
    rep.details[std::string(name) + "_min_eig"] = lmin;
    if (!(lmin > 0.0)) rep.fail(std::string(name) + " is not positive definite");
  };
  check(w.Q, "Q");
  check(w.R, "R");
  return rep;
}

/// All standing assumptions on a problem, merged into one report.
inline ValidationReport validate_problem(const ProblemSpec& spec,
                                         const SolverSettings& st = {}) {
  spec.check();
  ValidationReport rep;
  auto merge = [&](const char* key, const ValidationReport& r) {
    rep.details[key] = r.to_json();
    for (const auto& s : r.issues) rep.fail(std::string(key) + ": " + s);
  };
  merge("plant", validate_plant(spec.plant));
  merge("Y", validate_polyhedron(spec.Y, SetRole::kStage, 1e-8, st));
  merge("W", validate_polyhedron(spec.W, SetRole::kDisturbance, 1e-8, st));
  merge("weights", validate_weights(spec.weights));
  return rep;
}

// ---------------------------------------------------------------------------
// Problem file

namespace detail {

// Line (1-based) at which the value addressed by a JSON pointer starts, or 0
// if it cannot be located. Only used to decorate error messages.
class JsonLocator {
 public:
  explicit JsonLocator(const std::string& text) : t_(text) {}

  int line_of(const std::string& pointer) {
    std::vector<std::string> parts;
    std::size_t k = 1;
    while (k <= pointer.size() && !pointer.empty()) {
      const std::size_t e = pointer.find('/', k);
      parts.push_back(pointer.substr(k, e == std::string::npos ? e : e - k));
      if (e == std::string::npos) break;
      k = e + 1;
    }
    pos_ = 0;
    try {
      skip_ws();
      for (const auto& p : parts) {
        if (!descend(p)) return 0;
        skip_ws();
      }
    } catch (...) {
      return 0;
    }
    return 1 + static_cast<int>(std::count(t_.begin(), t_.begin() + pos_, '\n'));
  }

 private:
  void skip_ws() {
    while (pos_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[pos_])))
      ++pos_;
  }
  std::string read_string() {
    std::string out;
    ++pos_;
    while (pos_ < t_.size() && t_[pos_] != '"') {
      if (t_[pos_] == '\\') ++pos_;
      out += t_[pos_++];
    }
    ++pos_;
    return out;
  }
  void skip_value() {
    skip_ws();
    if (pos_ >= t_.size()) throw 0;
    const char c = t_[pos_];
    if (c == '"') {
      read_string();
    } else if (c == '{' || c == '[') {
      const char close = c == '{' ? '}' : ']';
      ++pos_;
      skip_ws();
      if (t_[pos_] == close) {
        ++pos_;
        return;
      }
      for (;;) {
        skip_ws();
        if (c == '{') {
          read_string();
          skip_ws();
          ++pos_;  // ':'
        }
        skip_value();
        skip_ws();
        if (t_[pos_] == ',') {
          ++pos_;
          continue;
        }
        ++pos_;  // close
        return;
      }
    } else {
      while (pos_ < t_.size() && t_[pos_] != ',' && t_[pos_] != '}' &&
             t_[pos_] != ']' && !std::isspace(static_cast<unsigned char>(t_[pos_])))
        ++pos_;
    }
  }
  bool descend(const std::string& key) {
    if (t_[pos_] == '{') {
      ++pos_;
      for (;;) {
        skip_ws();
        if (t_[pos_] == '}') return false;
        const std::string k = read_string();
        skip_ws();
        ++pos_;
        skip_ws();
        if (k == key) return true;
        skip_value();
        skip_ws();
        if (t_[pos_] == ',') ++pos_;
      }
    }
    if (t_[pos_] == '[') {
      const long idx = std::stol(key);
      ++pos_;
      for (long i = 0;; ++i) {
        skip_ws();
        if (t_[pos_] == ']') return false;
        if (i == idx) return true;
        skip_value();
        skip_ws();
        if (t_[pos_] == ',') ++pos_;
      }
    }
    return false;
  }

  const std::string& t_;
  std::size_t pos_ = 0;
};

inline std::string path_of(const std::string& msg) {
  // Our messages start with a JSON pointer followed by ':'.
  if (msg.empty() || msg[0] != '/') return {};
  return msg.substr(0, msg.find(':'));
}

inline GainSource parse_gain_source(const json& j, const std::string& path,
                                    bool terminal) {
  GainSource g;
  g.kind = terminal ? GainSource::Kind::kLqrCostWeights
                    : GainSource::Kind::kLqrIdentity;
  if (j.is_string()) {
    const auto t = j.get<std::string>();
    if (t == "lqr_identity" && !terminal) return g;
    if (t == "lqr_cost_weights" && terminal) return g;
    throw DataError(path + ": unknown gain source \"" + t + "\"");
  }
  const auto t = json_require(j, "type", path);
  if (!t.is_string()) throw DataError(path + "/type: expected a string");
  const auto type = t.get<std::string>();
  if (!terminal && type == "lqr_identity") return g;
  if (terminal && type == "lqr_cost_weights") return g;
  if (!terminal && type == "lqr_weights") {
    g.kind = GainSource::Kind::kLqrWeights;
    g.Qs = json_matrix(json_require(j, "Q", path), path + "/Q");
    g.Rs = json_matrix(json_require(j, "R", path), path + "/R");
    return g;
  }
  if (type == "given") {
    g.kind = GainSource::Kind::kGiven;
    g.K = json_matrix(json_require(j, "K", path), path + "/K");
    if (terminal) g.P = json_matrix(json_require(j, "P", path), path + "/P");
    return g;
  }
  throw DataError(path + "/type: unknown gain source \"" + type + "\"");
}

}  // namespace detail

inline SynthesisOptions parse_options(const json& j,
                                      const std::string& path = "/options") {
  SynthesisOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw DataError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const std::string p = path + "/" + k;
    const json& v = it.value();
    if (k == "alpha_target") {
      o.alpha_target = json_number(v, p);
    } else if (k == "max_NS" || k == "max_NZ") {
      if (!v.is_number_integer()) throw DataError(p + ": expected an integer");
      (k == "max_NS" ? o.max_NS : o.max_NZ) = v.get<int>();
    } else if (k == "NZ_mode") {
      if (!v.is_string()) throw DataError(p + ": expected a string");
      try {
        o.NZ_mode = parse_nz_mode(v.get<std::string>());
      } catch (const DataError& e) {
        throw DataError(p + ": " + e.what());
      }
    } else if (k == "KS_source") {
      o.KS_source = detail::parse_gain_source(v, p, false);
    } else if (k == "KZ_source") {
      o.KZ_source = detail::parse_gain_source(v, p, true);
    } else if (k == "epsilon_rpi") {
      if (!v.is_null()) o.epsilon_rpi = json_number(v, p);
    } else {
      throw DataError(p + ": unknown option");
    }
  }
  o.check();
  return o;
}

inline json options_to_json(const SynthesisOptions& o) {
  json j = {{"alpha_target", o.alpha_target},
            {"max_NS", o.max_NS},
            {"max_NZ", o.max_NZ},
            {"NZ_mode", to_string(o.NZ_mode)}};
  switch (o.KS_source.kind) {
    case GainSource::Kind::kLqrWeights:
      j["KS_source"] = {{"type", "lqr_weights"},
                        {"Q", to_json_matrix(o.KS_source.Qs)},
                        {"R", to_json_matrix(o.KS_source.Rs)}};
      break;
    case GainSource::Kind::kGiven:
      j["KS_source"] = {{"type", "given"}, {"K", to_json_matrix(o.KS_source.K)}};
      break;
    default:
      j["KS_source"] = {{"type", "lqr_identity"}};
  }
  if (o.KZ_source.kind == GainSource::Kind::kGiven)
    j["KZ_source"] = {{"type", "given"},
                      {"K", to_json_matrix(o.KZ_source.K)},
                      {"P", to_json_matrix(o.KZ_source.P)}};
  else
    j["KZ_source"] = {{"type", "lqr_cost_weights"}};
  if (o.epsilon_rpi) j["epsilon_rpi"] = *o.epsilon_rpi;
  return j;
}

inline ProblemSpec problem_from_json(const json& j) {
  ProblemSpec s;
  s.plant.A = json_matrix(json_require(j, "A", ""), "/A");
  const auto n = s.plant.A.rows();
  s.plant.B = json_matrix(json_require(j, "B", ""), "/B");
  const auto m = s.plant.B.cols();
  const json& Y = json_require(j, "Y", "");
  MatrixXd C = json_matrix(json_require(Y, "C", "/Y"), "/Y/C", n);
  MatrixXd D = json_matrix(json_require(Y, "D", "/Y"), "/Y/D", m);
  if (C.rows() != D.rows())
    throw DataError("/Y/D: expected " + std::to_string(C.rows()) +
                    " rows to match /Y/C, got " + std::to_string(D.rows()));
  if (C.cols() != n)
    throw DataError("/Y/C: expected " + std::to_string(n) + " columns");
  if (D.cols() != m)
    throw DataError("/Y/D: expected " + std::to_string(m) + " columns");
  MatrixXd CD(C.rows(), n + m);
  CD << C, D;
  const json& W = json_require(j, "W", "");
  MatrixXd E = json_matrix(json_require(W, "E", "/W"), "/W/E", n);
  if (E.cols() != n)
    throw DataError("/W/E: expected " + std::to_string(n) + " columns");
  for (Eigen::Index i = 0; i < CD.rows(); ++i)
    if (CD.row(i).cwiseAbs().maxCoeff() == 0.0)
      throw DataError("/Y/C/" + std::to_string(i) + ": zero constraint row");
  for (Eigen::Index i = 0; i < E.rows(); ++i)
    if (E.row(i).cwiseAbs().maxCoeff() == 0.0)
      throw DataError("/W/E/" + std::to_string(i) + ": zero constraint row");
  s.Y = HPolyhedron::unit_offsets(std::move(CD));
  s.W = HPolyhedron::unit_offsets(std::move(E));
  s.weights.Q = json_matrix(json_require(j, "Q", ""), "/Q");
  s.weights.R = json_matrix(json_require(j, "R", ""), "/R");
  const json& N = json_require(j, "N", "");
  if (!N.is_number_integer()) throw DataError("/N: expected an integer");
  s.N = N.get<int>();
  if (j.contains("options")) s.options = parse_options(j["options"]);
  try {
    s.check();
  } catch (const DataError& e) {
    throw DataError(std::string("/: ") + e.what());
  }
  return s;
}

inline json problem_to_json(const ProblemSpec& s) {
  return {{"A", to_json_matrix(s.plant.A)},
          {"B", to_json_matrix(s.plant.B)},
          {"Y", {{"C", to_json_matrix(s.C())}, {"D", to_json_matrix(s.D())}}},
          {"W", {{"E", to_json_matrix(s.W.normals)}}},
          {"Q", to_json_matrix(s.weights.Q)},
          {"R", to_json_matrix(s.weights.R)},
          {"N", s.N},
          {"options", options_to_json(s.options)}};
}

/// Parses problem text; errors carry the JSON path and the source line.
inline ProblemSpec parse_problem(const std::string& text,
                                 const std::string& source = "<input>") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto byte = std::min<std::size_t>(e.byte, text.size());
    const int line =
        1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
    throw DataError(source + ":" + std::to_string(line) + ": " + e.what());
  }
  try {
    return problem_from_json(j);
  } catch (const DataError& e) {
    const std::string msg = e.what();
    const std::string path = detail::path_of(msg);
    int line = 0;
    if (!path.empty()) line = detail::JsonLocator(text).line_of(path);
    throw DataError(source + (line > 0 ? ":" + std::to_string(line) : "") +
                    ": " + msg);
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ProblemSpec load_problem(const std::string& path) {
  return parse_problem(read_text_file(path), path);
}

}  // namespace irtmpc
