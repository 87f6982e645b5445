// framescope: generate probabilistic frames, run tightness flows, compute
// Wasserstein distances and run the numerical verification suites.
//
// Exit codes: 0 success, 1 failed check or failed computation, 2 usage error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "framescope/error.hpp"
#include "framescope/flow.hpp"
#include "framescope/generate.hpp"
#include "framescope/io.hpp"
#include "framescope/potentials.hpp"
#include "framescope/transport.hpp"
#include "framescope/verify.hpp"

namespace fs = std::filesystem;
using namespace framescope;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::map<std::string, GeneratorKind> kGeneratorNames = {
    {"random-unit-norm", GeneratorKind::RandomUnitNorm},
    {"perturbed-onb", GeneratorKind::PerturbedOnb},
    {"paulsen", GeneratorKind::PaulsenInstance},
    {"file", GeneratorKind::FromFile},
};

struct GenOptions {
  std::string kind = "perturbed-onb";
  int d = 2;
  int n = 2;
  std::uint64_t seed = 0;
  double mag = 0.1;
  double eps = 0.1;
  std::string in;
};

void add_gen_options(CLI::App* cmd, GenOptions& g, bool with_kind_flag_named_gen) {
  const char* kind_flag = with_kind_flag_named_gen ? "--gen" : "--kind";
  cmd->add_option(kind_flag, g.kind, "Generator: random-unit-norm | perturbed-onb | paulsen | file")
      ->check(CLI::IsMember({"random-unit-norm", "perturbed-onb", "paulsen", "file"}));
  cmd->add_option("--d", g.d, "Ambient dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--n", g.n, "Number of atoms")->check(CLI::PositiveNumber);
  cmd->add_option("--mag", g.mag, "Perturbation magnitude (perturbed-onb)");
  cmd->add_option(with_kind_flag_named_gen ? "--paulsen-eps" : "--eps", g.eps, "Paulsen closeness eps in (0,1) (paulsen)");
  cmd->add_option("--in", g.in, "Measure JSON file (implies --" + std::string(with_kind_flag_named_gen ? "gen" : "kind") + " file)");
}

GeneratorSpec to_spec(const GenOptions& g, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.kind = g.in.empty() ? kGeneratorNames.at(g.kind) : GeneratorKind::FromFile;
  spec.d = g.d;
  spec.n = g.n;
  spec.seed = seed;
  spec.magnitude = g.mag;
  spec.eps = g.eps;
  spec.path = g.in;
  if (spec.kind == GeneratorKind::FromFile && spec.path.empty()) throw UsageError("--in is required for file input");
  return spec;
}

void write_json_to(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

// ---- flow / jko -----------------------------------------------------------

struct FlowOptions {
  GenOptions gen;
  std::string config_path;
  std::string out;
  std::string dump_dir;
  int sweep = 1;
  std::string potential = "tp";
  std::string integrator = "euler";
  std::string ot = "exact";
  double reg = 1e-3;
  FlowConfig config;
};

void add_flow_options(CLI::App* cmd, FlowOptions& o, bool jko) {
  add_gen_options(cmd, o.gen, true);
  cmd->add_option("--config", o.config_path, "Flow config JSON (field names as in FlowConfig); flags override it");
  cmd->add_option("--seed", o.config.seed, "Seed for the generator (and first seed of a sweep)");
  cmd->add_option("--eps", o.config.epsilon, "Flow exponent eps >= 0 (velocity -4Tx|4Tx|^eps)");
  cmd->add_option("--max-steps", o.config.max_steps, "Maximum number of steps");
  cmd->add_option("--stop-tp", o.config.stop_tp, "Stop when the potential falls below this fraction of its start");
  cmd->add_option("--stop-stall", o.config.stop_stall, "Per-step decrease counted as a stall");
  cmd->add_option("--stall-window", o.config.stall_window, "Consecutive stalled steps before stopping");
  cmd->add_option("--record-every", o.config.record_every, "Record every k-th step");
  cmd->add_option("--tight-tol", o.config.tight_tol, "Relative spectral tolerance for tightness");
  cmd->add_option("--out", o.out, "Trajectory CSV (default: stdout)");
  cmd->add_option("--dump-states", o.dump_dir, "Directory for numbered JSON dumps of recorded states");
  cmd->add_option("--sweep", o.sweep, "Run this many consecutive seeds concurrently")->check(CLI::PositiveNumber);
  if (jko) {
    cmd->add_option("--tau", o.config.tau, "Minimizing-movement step size");
    cmd->add_option("--inner-iters", o.config.inner.inner_iters, "Inner descent iterations per step");
    cmd->add_option("--inner-lr", o.config.inner.inner_lr, "Inner descent step (<= 0: automatic)");
    cmd->add_option("--inner-tol", o.config.inner.inner_tol, "Relative gradient tolerance of the inner descent");
    cmd->add_option("--ot", o.ot, "Inner transport solver: exact | entropic")->check(CLI::IsMember({"exact", "entropic"}));
    cmd->add_option("--reg", o.reg, "Entropic regularization for --ot entropic");
  } else {
    cmd->add_option("--dt", o.config.dt, "Explicit time step");
    cmd->add_option("--potential", o.potential, "Driven potential: tp | pfp")->check(CLI::IsMember({"tp", "pfp"}));
    cmd->add_option("--p", o.config.p, "Even exponent for --potential pfp");
    cmd->add_flag("--sphere", o.config.sphere_constrained, "Keep atoms on the unit sphere (pfp only)");
    cmd->add_option("--integrator", o.integrator, "euler | rk4 (rk4 needs eps = 0)")->check(CLI::IsMember({"euler", "rk4"}));
  }
}

// Starts from the config file (if any) and re-applies every flag the user gave.
FlowConfig resolve_config(CLI::App* cmd, const FlowOptions& o, bool jko) {
  FlowConfig c = o.config_path.empty() ? FlowConfig{} : read_config(o.config_path);
  auto given = [cmd](const char* flag) { return cmd->count(flag) > 0; };
  if (o.config_path.empty() || given("--seed")) c.seed = o.config.seed;
  if (o.config_path.empty() || given("--eps")) c.epsilon = o.config.epsilon;
  if (o.config_path.empty() || given("--max-steps")) c.max_steps = o.config.max_steps;
  if (o.config_path.empty() || given("--stop-tp")) c.stop_tp = o.config.stop_tp;
  if (o.config_path.empty() || given("--stop-stall")) c.stop_stall = o.config.stop_stall;
  if (o.config_path.empty() || given("--stall-window")) c.stall_window = o.config.stall_window;
  if (o.config_path.empty() || given("--record-every")) c.record_every = o.config.record_every;
  if (o.config_path.empty() || given("--tight-tol")) c.tight_tol = o.config.tight_tol;
  if (jko) {
    c.scheme = Scheme::Jko;
    if (o.config_path.empty() || given("--tau")) c.tau = o.config.tau;
    if (o.config_path.empty() || given("--inner-iters")) c.inner.inner_iters = o.config.inner.inner_iters;
    if (o.config_path.empty() || given("--inner-lr")) c.inner.inner_lr = o.config.inner.inner_lr;
    if (o.config_path.empty() || given("--inner-tol")) c.inner.inner_tol = o.config.inner.inner_tol;
    if (o.config_path.empty() || given("--ot") || given("--reg")) {
      c.inner.ot = o.ot == "entropic" ? OtMethod::entropic(o.reg) : OtMethod::exact();
    }
  } else {
    c.scheme = Scheme::Explicit;
    if (o.config_path.empty() || given("--dt")) c.dt = o.config.dt;
    if (o.config_path.empty() || given("--potential")) {
      c.potential = o.potential == "pfp" ? PotentialKind::PFrame : PotentialKind::Tightness;
    }
    if (o.config_path.empty() || given("--p")) c.p = o.config.p;
    if (o.config_path.empty() || given("--sphere")) c.sphere_constrained = o.config.sphere_constrained;
    if (o.config_path.empty() || given("--integrator")) {
      c.integrator = o.integrator == "rk4" ? Integrator::Rk4 : Integrator::Euler;
    }
  }
  c.validate();
  return c;
}

std::string with_seed_suffix(const std::string& path, std::uint64_t seed) {
  const fs::path p(path);
  return (p.parent_path() / (p.stem().string() + "_seed" + std::to_string(seed) + p.extension().string())).string();
}

int threads_cap() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FRAMESCOPE_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) cap = std::min<unsigned>(cap, static_cast<unsigned>(v));
    } catch (const std::exception&) {
      throw UsageError("FRAMESCOPE_THREADS must be a positive integer");
    }
  }
  return static_cast<int>(cap);
}

struct RunOutput {
  FlowTrajectory trajectory;
  std::string error;
};

int run_flow_command(CLI::App* cmd, const FlowOptions& o, bool jko) {
  const FlowConfig base = resolve_config(cmd, o, jko);
  const int runs = o.sweep;
  std::vector<std::optional<RunOutput>> outputs(static_cast<std::size_t>(runs));
  auto work = [&](int k) {
    FlowConfig config = base;
    config.seed = base.seed + static_cast<std::uint64_t>(k);
    RunOutput out;
    try {
      const DiscreteMeasure mu0 = generate(to_spec(o.gen, config.seed));
      out.trajectory = run_flow(mu0, config);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    outputs[static_cast<std::size_t>(k)] = std::move(out);
  };
  // Independent trajectories; each writes only its own slot.
  const int workers = std::min(runs, threads_cap());
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (int k = t; k < runs; k += workers) work(k);
    });
  }
  for (auto& th : pool) th.join();

  int status = 0;
  for (int k = 0; k < runs; ++k) {
    const std::uint64_t seed = base.seed + static_cast<std::uint64_t>(k);
    const RunOutput& out = *outputs[static_cast<std::size_t>(k)];
    if (!out.error.empty()) {
      std::cerr << "seed " << seed << ": " << out.error << '\n';
      status = kExitCheckFailed;
      continue;
    }
    const FlowTrajectory& traj = out.trajectory;
    if (o.out.empty() || o.out == "-") {
      write_trajectory_csv(std::cout, traj);
    } else {
      const std::string path = runs > 1 ? with_seed_suffix(o.out, seed) : o.out;
      std::ofstream file(path);
      if (!file) throw Error(ErrorCode::ParseError, "cannot write " + path);
      write_trajectory_csv(file, traj);
    }
    if (!o.dump_dir.empty()) {
      const fs::path dir = runs > 1 ? fs::path(o.dump_dir) / ("seed" + std::to_string(seed)) : fs::path(o.dump_dir);
      fs::create_directories(dir);
      for (std::size_t r = 0; r < traj.size(); ++r) {
        char name[32];
        std::snprintf(name, sizeof(name), "state_%06d.json", traj.steps[r]);
        write_measure((dir / name).string(), traj.states[r]);
      }
    }
    std::cerr << "seed " << seed << ": " << to_string(traj.termination) << " after " << traj.steps_taken
              << " steps, tp " << format_double(traj.tp_values.front()) << " -> "
              << format_double(traj.tp_values.back()) << '\n';
  }
  return status;
}

// ---- verify ---------------------------------------------------------------

void print_check_table(const std::vector<CheckResult>& results) {
  std::printf("%-14s %-6s %-24s %-24s %-24s\n", "name", "holds", "lhs", "rhs", "slack");
  for (const auto& r : results) {
    std::printf("%-14s %-6s %-24s %-24s %-24s\n", r.name.c_str(), r.holds ? "yes" : "NO",
                format_double(r.lhs).c_str(), format_double(r.rhs).c_str(), format_double(r.slack).c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"framescope: probabilistic frames, tightness flows and optimal transport"};
  app.require_subcommand(1);

  // gen
  GenOptions gen_opts;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a measure and write it as JSON");
  add_gen_options(gen, gen_opts, false);
  gen->add_option("--seed", gen_opts.seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output JSON (default: stdout)");

  // flow / jko
  FlowOptions flow_opts;
  auto* flow = app.add_subcommand("flow", "Run the explicit particle flow and write the trajectory CSV");
  add_flow_options(flow, flow_opts, false);
  FlowOptions jko_opts;
  auto* jko = app.add_subcommand("jko", "Run the minimizing-movement (JKO) scheme and write the trajectory CSV");
  add_flow_options(jko, jko_opts, true);

  // wasserstein
  std::string wa, wb, plan_csv, plan_json;
  double wp = 2.0;
  bool entropic = false;
  EntropicOptions ent;
  auto* wass = app.add_subcommand("wasserstein", "Wasserstein distance between two measure files");
  wass->add_option("a", wa, "Source measure JSON")->required();
  wass->add_option("b", wb, "Target measure JSON")->required();
  wass->add_option("-p,--p", wp, "Cost exponent p >= 1");
  wass->add_flag("--entropic", entropic, "Use the entropic solver (upper bound)");
  wass->add_option("--reg", ent.reg, "Entropic regularization");
  wass->add_option("--max-iter", ent.max_iter, "Entropic iteration budget");
  wass->add_option("--tol", ent.tol, "Entropic marginal tolerance");
  wass->add_option("--plan", plan_csv, "Write the plan as sparse i,j,mass CSV");
  wass->add_option("--plan-json", plan_json, "Write the plan as dense JSON");

  // potentials
  std::string pot_in;
  std::vector<int> pot_p;
  auto* pot = app.add_subcommand("potentials", "Evaluate frame potentials, bounds and diagnostics of a measure");
  pot->add_option("measure", pot_in, "Measure JSON")->required();
  pot->add_option("--p", pot_p, "Even exponents for the p-frame potential (repeatable)");

  // verify
  std::vector<std::string> suites{"all"};
  int instances = 100;
  std::uint64_t verify_seed = 0;
  std::string witness_dir, replay_path;
  bool quiet = false;
  auto* ver = app.add_subcommand("verify", "Run the numerical inequality/identity checks");
  ver->add_option("--suite", suites, "Suites: all | frame-op | nearest-tight | tight-iff | tp-operator | expansion | "
                                     "pframe | moment-grad | tp-grad | barycenter");
  ver->add_option("--seeds", instances, "Seeded instances per suite")->check(CLI::PositiveNumber);
  ver->add_option("--seed", verify_seed, "Base seed");
  ver->add_option("--witness-dir", witness_dir, "Write failing witnesses here as JSON");
  ver->add_option("--replay", replay_path, "Replay a single witness JSON instead of running suites");
  ver->add_flag("--quiet", quiet, "Only print the summary line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) {
      const DiscreteMeasure mu = generate(to_spec(gen_opts, gen_opts.seed));
      write_json_to(gen_out, measure_to_json(mu));
      return 0;
    }
    if (*flow) return run_flow_command(flow, flow_opts, false);
    if (*jko) return run_flow_command(jko, jko_opts, true);
    if (*wass) {
      const DiscreteMeasure a = read_measure(wa);
      const DiscreteMeasure b = read_measure(wb);
      const TransportResult r = entropic ? wasserstein_entropic(a, b, wp, ent) : wasserstein_exact(a, b, wp);
      std::cout << format_double(r.distance) << '\n';
      if (!plan_csv.empty()) {
        std::ofstream out(plan_csv);
        if (!out) throw Error(ErrorCode::ParseError, "cannot write " + plan_csv);
        write_plan_csv(out, r.plan);
      }
      if (!plan_json.empty()) write_json_to(plan_json, plan_to_json(r.plan));
      return 0;
    }
    if (*pot) {
      const DiscreteMeasure mu = read_measure(pot_in);
      const FrameDiagnostics diag = diagnostics(mu);
      json out{{"pfp", pfp(mu)},
               {"m2", moment(mu, 2.0)},
               {"tightness_potential", report_to_json(tightness_potential(mu))},
               {"diagnostics",
                {{"lower_bound", diag.lower_bound},
                 {"upper_bound", diag.upper_bound},
                 {"is_frame", diag.is_frame},
                 {"is_tight", diag.is_tight},
                 {"tightness_gap", diag.tightness_gap},
                 {"second_moment", diag.second_moment}}}};
      json pframe = json::object();
      for (const int p : pot_p) pframe[std::to_string(p)] = report_to_json(pframe_potential(mu, p));
      if (!pot_p.empty()) out["pframe_potential"] = pframe;
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (*ver) {
      std::vector<CheckResult> results;
      if (!replay_path.empty()) {
        std::ifstream in(replay_path);
        if (!in) throw Error(ErrorCode::ParseError, "cannot open " + replay_path);
        results.push_back(replay_check(json::parse(in)));
      } else {
        results = run_suite(suites, instances, verify_seed).results;
      }
      int failures = 0;
      for (std::size_t k = 0; k < results.size(); ++k) {
        if (results[k].holds) continue;
        ++failures;
        if (!witness_dir.empty()) {
          fs::create_directories(witness_dir);
          write_json_to((fs::path(witness_dir) / (results[k].name + "_" + std::to_string(k) + ".json")).string(),
                        results[k].witness);
        }
      }
      if (!quiet) print_check_table(results);
      std::printf("%zu checks, %d failed\n", results.size(), failures);
      return failures == 0 ? 0 : kExitCheckFailed;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    const bool usage = e.code() == ErrorCode::ParseError || e.code() == ErrorCode::InvalidArgument;
    return usage ? kExitUsage : kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitUsage;
}
