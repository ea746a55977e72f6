#pragma once

// Random-system sweeps over the offline design.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "irtmpc/errors.hpp"
#include "irtmpc/linalg.hpp"
#include "irtmpc/model.hpp"
#include "irtmpc/synthesis.hpp"

namespace irtmpc {

struct BenchConfig {
  std::vector<std::pair<int, int>> dims;
  int samples_per_dim = 100;
  double state_scale = 100.0;
  double input_scale = 50.0;
  double alpha_target = 0.5;
  int max_NS = 10000;
  int max_NZ = 10000;
  NZMode NZ_mode = NZMode::kSufficient;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
  bool large = false;

  void check() const {
    if (dims.empty()) throw DataError("bench: no dimensions");
    for (auto [n, m] : dims)
      if (n < 1 || m < 1) throw DataError("bench: dimensions must be positive");
    if (samples_per_dim < 1) throw DataError("bench: samples_per_dim must be >= 1");
    if (max_NS < 1 || max_NZ < 1) throw DataError("bench: caps must be >= 1");
    if (!(alpha_target > 0.0 && alpha_target < 1.0))
      throw DataError("bench: alpha_target must lie in (0, 1)");
    if (!large)
      for (auto [n, m] : dims)
        if (n > 100)
          throw DataError("bench: n > 100 requires the large flag");
  }
};

inline BenchConfig bench_config_from_json(const json& j) {
  BenchConfig c;
  if (!j.is_object()) throw DataError("/: expected an object");
  const json& dims = json_require(j, "dims", "");
  if (!dims.is_array()) throw DataError("/dims: expected an array");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto p = "/dims/" + std::to_string(i);
    if (!dims[i].is_array() || dims[i].size() != 2 || !dims[i][0].is_number_integer() ||
        !dims[i][1].is_number_integer())
      throw DataError(p + ": expected [n, m]");
    c.dims.emplace_back(dims[i][0].get<int>(), dims[i][1].get<int>());
  }
  auto get_int = [&](const char* k, int& out) {
    if (!j.contains(k)) return;
    if (!j[k].is_number_integer()) throw DataError(std::string("/") + k + ": expected an integer");
    out = j[k].get<int>();
  };
  get_int("samples_per_dim", c.samples_per_dim);
  get_int("max_NS", c.max_NS);
  get_int("max_NZ", c.max_NZ);
  get_int("threads", c.threads);
  if (j.contains("caps")) {
    const int cap = j["caps"].get<int>();
    c.max_NS = c.max_NZ = cap;
  }
  if (j.contains("state_scale")) c.state_scale = json_number(j["state_scale"], "/state_scale");
  if (j.contains("input_scale")) c.input_scale = json_number(j["input_scale"], "/input_scale");
  if (j.contains("alpha_target")) c.alpha_target = json_number(j["alpha_target"], "/alpha_target");
  if (j.contains("NZ_mode")) c.NZ_mode = parse_nz_mode(j["NZ_mode"].get<std::string>());
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw DataError("/seed: expected an integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("large")) c.large = j["large"].get<bool>();
  c.check();
  return c;
}

inline json bench_config_to_json(const BenchConfig& c) {
  json dims = json::array();
  for (auto [n, m] : c.dims) dims.push_back({n, m});
  return {{"dims", dims},
          {"samples_per_dim", c.samples_per_dim},
          {"state_scale", c.state_scale},
          {"input_scale", c.input_scale},
          {"alpha_target", c.alpha_target},
          {"max_NS", c.max_NS},
          {"max_NZ", c.max_NZ},
          {"NZ_mode", to_string(c.NZ_mode)},
          {"seed", c.seed},
          {"large", c.large}};
}

/// A = G·(ρ_draw/ρ(G)), ρ_draw ~ U[0.3, 0.95]; B standard normal. Redrawn
/// until the plant validates (at most 100 times).
inline Plant random_system(int n, int m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw DataError("random_system: n, m must be >= 1");
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const MatrixXd G = rng.normal_matrix(n, n);
    const double rho_draw = rng.uniform(0.3, 0.95);
    Plant p;
    p.B = rng.normal_matrix(n, m);
    const double rg = spectral_radius(G);
    if (!(rg > 1e-12)) continue;
    p.A = G * (rho_draw / rg);
    if (validate_plant(p).pass) return p;
  }
  throw DataError("random_system: no valid plant after 100 draws");
}

/// Y = s_x B∞ⁿ × s_u B∞ᵐ, W = B∞ⁿ, Q = I, R = I, LQR-identity K_S.
inline ProblemSpec bench_problem(const Plant& plant, const BenchConfig& cfg) {
  ProblemSpec s;
  s.plant = plant;
  const int n = plant.n(), m = plant.m();
  s.Y = box_stage_set(n, m, cfg.state_scale, cfg.input_scale);
  s.W = HPolyhedron::box(n);
  s.weights.Q = MatrixXd::Identity(n, n);
  s.weights.R = MatrixXd::Identity(m, m);
  s.N = 1;
  s.options.alpha_target = cfg.alpha_target;
  s.options.max_NS = cfg.max_NS;
  s.options.max_NZ = cfg.max_NZ;
  s.options.NZ_mode = cfg.NZ_mode;
  return s;
}

struct SampleRecord {
  int dim_index = 0, sample_index = 0, n = 0, m = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::string reason;  // failure reason, empty on success
  int N_S = 0, N_Z = 0;
  double alpha = 0.0;
  double tS_ms = 0.0, tZ_s = 0.0;
  long lps = 0;

  json to_json() const {
    return {{"dim_index", dim_index}, {"sample_index", sample_index},
            {"n", n}, {"m", m}, {"seed", seed}, {"success", success},
            {"reason", reason}, {"N_S", N_S}, {"alpha", alpha}, {"N_Z", N_Z},
            {"tS_ms", tS_ms}, {"tZ_s", tZ_s}, {"lps", lps}};
  }
  static SampleRecord from_json(const json& j) {
    SampleRecord r;
    r.dim_index = j.at("dim_index").get<int>();
    r.sample_index = j.at("sample_index").get<int>();
    r.n = j.at("n").get<int>();
    r.m = j.at("m").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.success = j.at("success").get<bool>();
    r.reason = j.at("reason").get<std::string>();
    r.N_S = j.at("N_S").get<int>();
    r.alpha = j.at("alpha").get<double>();
    r.N_Z = j.at("N_Z").get<int>();
    r.tS_ms = j.at("tS_ms").get<double>();
    r.tZ_s = j.at("tZ_s").get<double>();
    r.lps = j.value("lps", 0L);
    return r;
  }
};

struct BenchRow {
  int n = 0, m = 0;
  int samples = 0, successes = 0;
  double mean_NS = 0, mean_alpha = 0, mean_tS_ms = 0, mean_NZ = 0, mean_tZ_s = 0;
  double success_rate = 0;
  std::map<std::string, int> failures;
};

inline SampleRecord run_sample(const BenchConfig& cfg, int di, int si) {
  SampleRecord r;
  r.dim_index = di;
  r.sample_index = si;
  r.n = cfg.dims[di].first;
  r.m = cfg.dims[di].second;
  r.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(di),
                       static_cast<std::uint64_t>(si));
  const long lp0 = lp_counter();
  try {
    const Plant plant = random_system(r.n, r.m, r.seed);
    const ProblemSpec spec = bench_problem(plant, cfg);
    const TubeDesign d = design(spec);
    const json& st = d.provenance["stages"];
    r.success = true;
    r.N_S = d.N_S();
    r.alpha = d.alpha();
    r.N_Z = d.N_Z();
    r.tS_ms = 1e3 * (st["NS"]["seconds"].get<double>() +
                     st["tightening"]["seconds"].get<double>());
    r.tZ_s = st["terminal_cost"]["seconds"].get<double>() + st["NZ"]["seconds"].get<double>();
  } catch (const SynthesisFailure& e) {
    r.reason = to_string(e.reason());
  } catch (const NumericalFailure&) {
    r.reason = "numerical";
  } catch (const DataError&) {
    r.reason = "data";
  }
  r.lps = lp_counter() - lp0;
  return r;
}

/// Means over successful samples, in sample order.
inline std::vector<BenchRow> aggregate(const std::vector<SampleRecord>& samples,
                                      const BenchConfig& cfg) {
  std::vector<BenchRow> rows(cfg.dims.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].n = cfg.dims[i].first;
    rows[i].m = cfg.dims[i].second;
  }
  for (const auto& s : samples) {
    if (s.dim_index < 0 || s.dim_index >= static_cast<int>(rows.size()))
      throw DataError("aggregate: sample has unknown dim_index");
    BenchRow& r = rows[s.dim_index];
    ++r.samples;
    if (!s.success) {
      ++r.failures[s.reason];
      continue;
    }
    ++r.successes;
    r.mean_NS += s.N_S;
    r.mean_alpha += s.alpha;
    r.mean_tS_ms += s.tS_ms;
    r.mean_NZ += s.N_Z;
    r.mean_tZ_s += s.tZ_s;
  }
  for (auto& r : rows) {
    if (r.successes > 0) {
      const double k = r.successes;
      r.mean_NS /= k;
      r.mean_alpha /= k;
      r.mean_tS_ms /= k;
      r.mean_NZ /= k;
      r.mean_tZ_s /= k;
    }
    r.success_rate = r.samples ? static_cast<double>(r.successes) / r.samples : 0.0;
  }
  return rows;
}

struct BenchResult {
  std::vector<SampleRecord> samples;  // ordered by (dim_index, sample_index)
  std::vector<BenchRow> rows;
};

/// Samples run on a worker pool; each has its own seed and results are
/// stored by index, so the output does not depend on scheduling.
inline BenchResult run_bench(const BenchConfig& cfg) {
  cfg.check();
  const int per = cfg.samples_per_dim;
  const int total = static_cast<int>(cfg.dims.size()) * per;
  BenchResult out;
  out.samples.resize(total);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < total; i = next++)
      out.samples[i] = run_sample(cfg, i / per, i % per);
  };
  int nt = cfg.threads > 0 ? cfg.threads
                           : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  nt = std::min(nt, total);
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  out.rows = aggregate(out.samples, cfg);
  return out;
}

inline const char* kBenchGainNote =
    "K_S from LQR with identity weights (eigenvalue placement is not "
    "implemented); N_S and alpha are comparable to pole-placement runs in "
    "order of magnitude only";

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "# " << kBenchGainNote << "\n";
  os << "n,m,NS_mean,alpha_mean,tS_ms,NZ_mean,tZ_s,success_rate\n";
  os << std::setprecision(10);
  for (const auto& r : rows)
    os << r.n << "," << r.m << "," << r.mean_NS << "," << r.mean_alpha << ","
       << r.mean_tS_ms << "," << r.mean_NZ << "," << r.mean_tZ_s << ","
       << r.success_rate << "\n";
  return os.str();
}

inline std::string samples_jsonl(const std::vector<SampleRecord>& samples) {
  std::ostringstream os;
  for (const auto& s : samples) os << s.to_json().dump() << "\n";
  return os.str();
}

inline std::vector<SampleRecord> parse_samples_jsonl(const std::string& text) {
  std::vector<SampleRecord> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(SampleRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError("raw log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline json bench_rows_to_json(const std::vector<BenchRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"n", r.n}, {"m", r.m}, {"samples", r.samples},
                   {"successes", r.successes}, {"NS_mean", r.mean_NS},
                   {"alpha_mean", r.mean_alpha}, {"tS_ms", r.mean_tS_ms},
                   {"NZ_mean", r.mean_NZ}, {"tZ_s", r.mean_tZ_s},
                   {"success_rate", r.success_rate}, {"failures", r.failures}});
  return arr;
}

}  // namespace irtmpc
