// irtmpc: validate / design / step / simulate / bench / support.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irtmpc/irtmpc.hpp"

namespace {

using namespace irtmpc;

enum Exit : int {
  kOk = 0,
  kValidation = 2,
  kSynthesis = 3,
  kNotInDomain = 4,
  kNumerical = 5,
  kUsage = 64,
};

std::string fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw 0;
    } catch (...) {
      throw DataError(what + ": cannot parse \"" + item + "\" as a number");
    }
  }
  return out;
}

VectorXd parse_vector(const std::string& s, int n, const std::string& what) {
  const auto v = parse_list(s, what);
  if (static_cast<int>(v.size()) != n)
    throw DataError(what + ": expected " + std::to_string(n) + " entries, got " +
                    std::to_string(v.size()));
  return Eigen::Map<const VectorXd>(v.data(), n);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(path + ": cannot open for writing");
  os << content;
  if (!os) throw DataError(path + ": write failed");
}

struct Globals {
  std::uint64_t seed = 0;
  double feas_tol = 1e-8;
  double kkt_tol = 1e-8;
  int max_iter = 200;
  std::string dump_dir;
  std::string manifest_path;
  bool json_out = false;

  SolverSettings settings() const {
    SolverSettings st;
    st.feas_tol = feas_tol;
    st.kkt_tol = kkt_tol;
    st.max_iter = max_iter;
    st.dump_dir = dump_dir;
    return st;
  }
  json to_json() const {
    return {{"seed", seed}, {"feas_tol", feas_tol}, {"kkt_tol", kkt_tol},
            {"max_iter", max_iter}, {"dump_problems", dump_dir}};
  }
};

class Run {
 public:
  Run(std::string sub, const Globals& g) : sub_(std::move(sub)), g_(g) {
    manifest_ = {{"tool", "irtmpc"}, {"version", kVersion}, {"subcommand", sub_},
                 {"options", g.to_json()}, {"inputs", json::object()}};
  }

  std::string read_input(const std::string& path) {
    std::string text = read_text_file(path);
    manifest_["inputs"][path] = fnv1a(text);
    return text;
  }
  void option(const std::string& k, json v) { manifest_["options"][k] = std::move(v); }
  void output(const std::string& path) { outputs_.push_back(path); }
  json& result() { return result_; }
  void say(const std::string& line) { human_ << line << "\n"; }

  int finish(int code) {
    manifest_["exit_status"] = code;
    manifest_["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    manifest_["outputs"] = outputs_;
    if (g_.json_out) {
      json out = result_;
      if (!out.is_object()) out = json::object();
      out["manifest"] = manifest_;
      std::cout << out.dump() << std::endl;
    } else {
      std::cout << human_.str();
    }
    std::string mpath = g_.manifest_path;
    if (mpath.empty() && !outputs_.empty()) mpath = outputs_.front() + ".manifest.json";
    if (!mpath.empty()) {
      try {
        write_file(mpath, manifest_.dump(2) + "\n");
      } catch (const std::exception& e) {
        std::cerr << "irtmpc: " << e.what() << "\n";
      }
    } else if (!g_.json_out) {
      std::cerr << "manifest: " << manifest_.dump() << "\n";
    }
    return code;
  }

 private:
  std::string sub_;
  Globals g_;
  json manifest_;
  json result_ = json::object();
  std::vector<std::string> outputs_;
  std::ostringstream human_;
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

ProblemSpec load_problem_into(Run& run, const std::string& path) {
  return parse_problem(run.read_input(path), path);
}

TubeDesign load_design_into(Run& run, const std::string& path, const ProblemSpec& spec,
                            const SolverSettings& st) {
  const std::string text = run.read_input(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  try {
    return design_from_json(j, spec, st);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

json step_json(const StepResult& s) {
  return {{"u", to_json_vector(s.u)},
          {"value", s.diag.value},
          {"z0", to_json_vector(s.diag.z0)},
          {"v0", to_json_vector(s.diag.v0)},
          {"iterations", s.diag.iterations},
          {"status", "optimal"}};
}

std::string fmt(const VectorXd& v) {
  std::ostringstream os;
  os << std::setprecision(10) << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << "]";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit rigid tube MPC: offline design, online control, simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->envname("IRTMPC_SEED");
  app.add_option("--feas-tol", g.feas_tol, "Solver feasibility tolerance")
      ->envname("IRTMPC_FEAS_TOL")->check(CLI::PositiveNumber);
  app.add_option("--kkt-tol", g.kkt_tol, "Solver optimality tolerance")
      ->envname("IRTMPC_KKT_TOL")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", g.max_iter, "Solver iteration cap")
      ->envname("IRTMPC_MAX_ITER")->check(CLI::PositiveNumber);
  app.add_option("--dump-problems", g.dump_dir, "Write every LP/QP to this directory")
      ->envname("IRTMPC_DUMP_PROBLEMS");
  app.add_option("--manifest", g.manifest_path, "Run manifest path")
      ->envname("IRTMPC_MANIFEST");
  app.add_flag("--json", g.json_out, "Print a single JSON object on stdout")
      ->envname("IRTMPC_JSON");

  std::string problem_path, design_path, out_path, plot_path, raw_path, config_path;
  std::string x_str, dir_str, set_name = "S", dist = "extreme", sequence_path;
  int steps = 20;
  bool verify = false, large = false;
  std::string nz_mode;

  auto* validate = app.add_subcommand("validate", "Check a problem file");
  validate->add_option("problem", problem_path)->required();

  auto* des = app.add_subcommand("design", "Run the offline design");
  des->add_option("problem", problem_path)->required();
  des->add_option("-o,--output", out_path, "Design file to write");
  des->add_flag("--verify", verify, "Re-run every certificate on the result");
  des->add_option("--nz-mode", nz_mode, "Override NZ_mode (exact|sufficient)");

  auto* step = app.add_subcommand("step", "One controller evaluation");
  step->add_option("design", design_path)->required();
  step->add_option("problem", problem_path)->required();
  step->add_option("--x", x_str, "State, comma separated")->required();

  auto* sim = app.add_subcommand("simulate", "Closed-loop simulation");
  sim->add_option("design", design_path)->required();
  sim->add_option("problem", problem_path)->required();
  sim->add_option("--x0", x_str, "Initial state, comma separated")->required();
  sim->add_option("--steps", steps)->check(CLI::NonNegativeNumber);
  sim->add_option("--dist", dist, "zero | extreme | uniform | custom");
  sim->add_option("--sequence", sequence_path, "JSON array of disturbances (custom)");
  sim->add_option("-o,--output", out_path, "Trace CSV");
  sim->add_option("--plot", plot_path, "SVG plot of |z0_k| and |v0_k|");

  auto* bench = app.add_subcommand("bench", "Random-system design sweep");
  bench->add_option("--config", config_path)->required();
  bench->add_option("-o,--output", out_path, "Table CSV");
  bench->add_option("--raw", raw_path, "Per-sample JSON lines");
  bench->add_flag("--large", large, "Allow n > 100");

  auto* sup = app.add_subcommand("support", "Evaluate a support function");
  sup->add_option("design", design_path)->required();
  sup->add_option("problem", problem_path)->required();
  sup->add_option("--dir", dir_str, "Direction, comma separated")->required();
  sup->add_option("--set", set_name, "S | W | ZS | Zf");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const CLI::App* active = app.get_subcommands().front();
  Run run(active->get_name(), g);
  const SolverSettings st = g.settings();

  try {
    if (active == validate) {
      const ProblemSpec spec = load_problem_into(run, problem_path);
      const auto rep = validate_problem(spec, st);
      run.result() = rep.to_json();
      run.say(rep.pass ? "valid" : "invalid");
      for (const auto& s : rep.issues) run.say("  " + s);
      return run.finish(rep.pass ? kOk : kValidation);
    }

    if (active == des) {
      ProblemSpec spec = load_problem_into(run, problem_path);
      if (!nz_mode.empty()) spec.options.NZ_mode = parse_nz_mode(nz_mode);
      run.option("verify", verify);
      const TubeDesign d = design(spec, st);
      json dj = design_to_json(d);
      int code = kOk;
      if (verify) {
        const auto rep = certify_design(d, spec, st);
        dj["certificates"] = rep.to_json();
        if (!rep.pass()) {
          std::cerr << "irtmpc: design certificates fail\n";
          for (const auto& c : rep.items)
            if (!c.pass) std::cerr << "  " << c.name << ": " << c.value << "\n";
          code = kSynthesis;
        }
      }
      if (!out_path.empty()) {
        write_file(out_path, dj.dump(2) + "\n");
        run.output(out_path);
      }
      run.result() = dj;
      std::ostringstream os;
      os << "N_S = " << d.N_S() << ", alpha = " << d.alpha() << ", max f = " << d.f.maxCoeff()
         << ", N_Z = " << d.N_Z() << " (" << to_string(d.mode) << ")";
      run.say(os.str());
      return run.finish(code);
    }

    if (active == step) {
      const ProblemSpec spec = load_problem_into(run, problem_path);
      const TubeDesign d = load_design_into(run, design_path, spec, st);
      const VectorXd x = parse_vector(x_str, spec.n(), "--x");
      run.option("x", to_json_vector(x));
      try {
        const StepResult s = mpc_step(d, spec, x, st);
        run.result() = step_json(s);
        run.say("u = " + fmt(s.u) + ", value = " + std::to_string(s.diag.value));
        return run.finish(kOk);
      } catch (const NotInDomain& e) {
        run.result() = {{"status", "not_in_domain"}};
        std::cerr << "irtmpc: " << e.what() << "\n";
        return run.finish(kNotInDomain);
      }
    }

    if (active == sim) {
      const ProblemSpec spec = load_problem_into(run, problem_path);
      const TubeDesign d = load_design_into(run, design_path, spec, st);
      const VectorXd x0 = parse_vector(x_str, spec.n(), "--x0");
      DisturbancePolicy pol;
      pol.mode = parse_disturbance_mode(dist);
      pol.seed = g.seed;
      if (pol.mode == DisturbanceMode::kCustomSequence) {
        if (sequence_path.empty()) throw DataError("--dist custom requires --sequence");
        const json seq = json::parse(run.read_input(sequence_path));
        if (!seq.is_array()) throw DataError(sequence_path + ": expected an array");
        for (std::size_t k = 0; k < seq.size(); ++k)
          pol.sequence.push_back(json_vector(seq[k], "/" + std::to_string(k)));
      }
      run.option("x0", to_json_vector(x0));
      run.option("steps", steps);
      run.option("dist", to_string(pol.mode));
      ClosedLoopTrace tr;
      try {
        tr = simulate(d, spec, x0, steps, pol, st);
      } catch (const NotInDomain& e) {
        run.result() = {{"status", "not_in_domain"}, {"step", 0}};
        std::cerr << "irtmpc: x0 is outside the controller's domain: " << e.what() << "\n";
        return run.finish(kNotInDomain);
      }
      tr.metadata["problem_hash"] = fnv1a(read_text_file(problem_path));
      tr.metadata["design_hash"] = fnv1a(read_text_file(design_path));
      if (!out_path.empty()) {
        write_file(out_path, trace_csv(tr));
        run.output(out_path);
      }
      if (!plot_path.empty()) {
        write_file(plot_path, trace_svg(tr));
        run.output(plot_path);
      }
      const auto dec = check_decrease(tr, spec.weights.Q);
      run.result() = {{"steps", tr.steps.size()},
                      {"aborted", tr.aborted},
                      {"abort_step", tr.abort_step},
                      {"abort_reason", tr.abort_reason},
                      {"final_state", to_json_vector(tr.final_state)},
                      {"decrease_pass", dec.pass},
                      {"decrease_worst_margin", dec.worst_margin},
                      {"metadata", tr.metadata}};
      run.say(std::to_string(tr.steps.size()) + " steps, final state " + fmt(tr.final_state) +
              (dec.pass ? ", value decrease holds" : ", value decrease VIOLATED"));
      if (tr.aborted) {
        std::cerr << "irtmpc: run aborted at step " << tr.abort_step << ": " << tr.abort_reason
                  << "\n";
        return run.finish(kNotInDomain);
      }
      return run.finish(kOk);
    }

    if (active == bench) {
      json cj = json::parse(run.read_input(config_path));
      if (large) cj["large"] = true;
      if (!cj.contains("seed") && g.seed != 0) cj["seed"] = g.seed;
      const BenchConfig cfg = bench_config_from_json(cj);
      run.option("config", bench_config_to_json(cfg));
      std::cerr << "irtmpc: " << kBenchGainNote << "\n";
      const BenchResult r = run_bench(cfg);
      if (!out_path.empty()) {
        write_file(out_path, bench_csv(r.rows));
        run.output(out_path);
      }
      if (!raw_path.empty()) {
        write_file(raw_path, samples_jsonl(r.samples));
        run.output(raw_path);
      }
      run.result() = {{"rows", bench_rows_to_json(r.rows)}, {"note", kBenchGainNote}};
      run.say(bench_csv(r.rows));
      return run.finish(kOk);
    }

    if (active == sup) {
      const ProblemSpec spec = load_problem_into(run, problem_path);
      const TubeDesign d = load_design_into(run, design_path, spec, st);
      const VectorXd y = parse_vector(dir_str, spec.n(), "--dir");
      run.option("set", set_name);
      run.option("dir", to_json_vector(y));
      json out = {{"set", set_name}};
      if (set_name == "S") {
        out["value"] = support_S(d.S, y, st);
      } else {
        SupportValue s;
        if (set_name == "W")
          s = support_polytope(spec.W, y, st);
        else if (set_name == "ZS")
          s = support_polytope(d.terminal.ZS(), y, st);
        else if (set_name == "Zf")
          s = support_terminal_intersection(d.terminal, y, st);
        else
          throw DataError("--set: expected S, W, ZS or Zf");
        out["bounded"] = s.bounded;
        out["value"] = s.bounded ? json(s.value) : json(nullptr);
        if (s.bounded) out["maximizer"] = to_json_vector(s.maximizer);
      }
      run.result() = out;
      run.say(out.dump());
      return run.finish(kOk);
    }
  } catch (const SynthesisFailure& e) {
    std::cerr << "irtmpc: " << e.what() << " [stage " << e.stage() << ", reason "
              << to_string(e.reason()) << "]\n";
    run.result() = {{"error", e.what()}, {"stage", e.stage()},
                    {"reason", to_string(e.reason())}, {"iterations", e.iterations()},
                    {"offending", e.offending()}};
    return run.finish(e.reason() == FailureReason::kValidation ? kValidation : kSynthesis);
  } catch (const NotInDomain& e) {
    std::cerr << "irtmpc: " << e.what() << "\n";
    run.result() = {{"error", e.what()}};
    return run.finish(kNotInDomain);
  } catch (const NumericalFailure& e) {
    std::cerr << "irtmpc: numerical failure: " << e.what() << "\n";
    run.result() = {{"error", e.what()}, {"iterations", e.iterations()}};
    return run.finish(kNumerical);
  } catch (const DataError& e) {
    std::cerr << "irtmpc: " << e.what() << "\n";
    run.result() = {{"error", e.what()}};
    return run.finish(kValidation);
  } catch (const json::exception& e) {
    std::cerr << "irtmpc: " << e.what() << "\n";
    run.result() = {{"error", e.what()}};
    return run.finish(kValidation);
  }
  return kUsage;
}
