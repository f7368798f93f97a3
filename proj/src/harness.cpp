#include "rmdp/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "rmdp/geometry.hpp"
#include "rmdp/rng.hpp"

namespace rmdp {
namespace {

void check_keys(const Json& section, const char* name,
                const std::set<std::string>& allowed) {
  if (!section.is_object()) {
    throw InvalidInput(std::string("config: section '") + name + "' must be an object");
  }
  for (const auto& item : section.items()) {
    if (!allowed.contains(item.key())) {
      throw InvalidInput(std::string("config: unknown key '") + name + "." +
                         item.key() + "'");
    }
  }
}

template <typename T>
void read(const Json& section, const char* key, T& out, const char* name) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const Json::exception&) {
    throw InvalidInput(std::string("config: bad value for '") + name + "." + key + "'");
  }
}

std::pair<double, double> read_range(const Json& section, const char* key,
                                     std::pair<double, double> fallback,
                                     const char* name) {
  if (!section.contains(key)) return fallback;
  std::vector<double> v;
  read(section, key, v, name);
  if (v.size() != 2 || v[0] > v[1]) {
    throw InvalidInput(std::string("config: '") + name + "." + key +
                       "' must be [lo, hi] with lo <= hi");
  }
  return {v[0], v[1]};
}

const Json& section_or_empty(const Json& j, const char* name) {
  static const Json empty = Json::object();
  return j.contains(name) ? j.at(name) : empty;
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
  check_keys(j, "config",
             {"problem", "ambiguity", "algorithm", "srpg", "drpg", "evaluation", "run"});
  ExperimentConfig cfg;
  cfg.raw = j;

  const Json& problem = section_or_empty(j, "problem");
  check_keys(problem, "problem",
             {"type", "states", "actions", "branching", "gamma", "cost_range",
              "instance_seed", "policy_param", "inventory"});
  read(problem, "type", cfg.problem, "problem");
  if (cfg.problem != "garnet" && cfg.problem != "inventory") {
    throw InvalidInput("config: problem.type must be garnet or inventory");
  }
  read(problem, "states", cfg.garnet.num_states, "problem");
  read(problem, "actions", cfg.garnet.num_actions, "problem");
  read(problem, "branching", cfg.garnet.branching, "problem");
  read(problem, "gamma", cfg.garnet.gamma, "problem");
  std::tie(cfg.garnet.cost_lo, cfg.garnet.cost_hi) =
      read_range(problem, "cost_range", {cfg.garnet.cost_lo, cfg.garnet.cost_hi}, "problem");
  read(problem, "instance_seed", cfg.instance_seed, "problem");
  if (problem.contains("policy_param")) {
    std::string name;
    read(problem, "policy_param", name, "problem");
    cfg.policy_param = policy_param_from_string(name);
  }
  if (problem.contains("inventory")) cfg.inventory = spec_from_json(problem["inventory"]);
  if (cfg.problem == "garnet") {
    if (cfg.garnet.num_states <= 0 || cfg.garnet.num_actions <= 0) {
      throw InvalidInput("config: problem.states and problem.actions must be positive");
    }
    if (cfg.garnet.branching < 1 || cfg.garnet.branching > cfg.garnet.num_states) {
      throw InvalidInput("config: problem.branching must lie in [1, states]");
    }
  }

  const Json& amb = section_or_empty(j, "ambiguity");
  check_keys(amb, "ambiguity", {"kind", "kappa_range", "kappa_seed"});
  if (amb.contains("kind")) {
    std::string kind;
    read(amb, "kind", kind, "ambiguity");
    cfg.set_kind = set_kind_from_string(kind);
  } else if (cfg.problem == "inventory") {
    cfg.set_kind = SetKind::kParamXi;
  }
  if ((cfg.problem == "inventory") != (cfg.set_kind == SetKind::kParamXi)) {
    throw InvalidInput("config: param_xi sets go with the inventory problem and only with it");
  }
  std::tie(cfg.kappa_lo, cfg.kappa_hi) =
      read_range(amb, "kappa_range", {cfg.kappa_lo, cfg.kappa_hi}, "ambiguity");
  read(amb, "kappa_seed", cfg.kappa_seed, "ambiguity");

  read(j, "algorithm", cfg.algorithm, "config");
  if (!cfg.runs_srpg() && !cfg.runs_drpg()) {
    throw InvalidInput("config: algorithm must be srpg, drpg or both");
  }

  const Json& srpg = section_or_empty(j, "srpg");
  check_keys(srpg, "srpg", {"tau", "sigma", "beta", "mu", "r1", "r2"});
  read(srpg, "tau", cfg.srpg.tau, "srpg");
  read(srpg, "sigma", cfg.srpg.sigma, "srpg");
  read(srpg, "beta", cfg.srpg.beta, "srpg");
  read(srpg, "mu", cfg.srpg.mu, "srpg");

  const Json& drpg = section_or_empty(j, "drpg");
  check_keys(drpg, "drpg",
             {"outer_step", "inner_step", "inner_max_iters", "inner_rel_tol",
              "inner_value_only_stop"});
  read(drpg, "outer_step", cfg.drpg.outer_step, "drpg");
  read(drpg, "inner_step", cfg.drpg.inner.step, "drpg");
  read(drpg, "inner_max_iters", cfg.drpg.inner.max_iters, "drpg");
  read(drpg, "inner_rel_tol", cfg.drpg.inner.rel_tol, "drpg");
  read(drpg, "inner_value_only_stop", cfg.drpg.inner.value_only_stop, "drpg");

  const Json& ev = section_or_empty(j, "evaluation");
  check_keys(ev, "evaluation",
             {"step", "max_iters", "rel_tol", "value_only_stop", "eval_every",
              "random_restarts"});
  read(ev, "step", cfg.eval.pgm.step, "evaluation");
  read(ev, "max_iters", cfg.eval.pgm.max_iters, "evaluation");
  read(ev, "rel_tol", cfg.eval.pgm.rel_tol, "evaluation");
  read(ev, "value_only_stop", cfg.eval.pgm.value_only_stop, "evaluation");
  read(ev, "eval_every", cfg.eval.eval_every, "evaluation");
  read(ev, "random_restarts", cfg.eval.pgm.random_restarts, "evaluation");

  const Json& run = section_or_empty(j, "run");
  check_keys(run, "run",
             {"total_update_budget", "num_seeds", "base_seed", "record_timing", "output_dir"});
  read(run, "total_update_budget", cfg.total_update_budget, "run");
  read(run, "num_seeds", cfg.num_seeds, "run");
  read(run, "base_seed", cfg.base_seed, "run");
  read(run, "record_timing", cfg.eval.record_timing, "run");
  read(run, "output_dir", cfg.output_dir, "run");
  if (cfg.total_update_budget < 0) throw InvalidInput("config: run.total_update_budget must be >= 0");
  if (cfg.num_seeds < 1) throw InvalidInput("config: run.num_seeds must be >= 1");
  if (cfg.eval.eval_every < 1) throw InvalidInput("config: evaluation.eval_every must be >= 1");

  const int S = cfg.problem == "garnet" ? cfg.garnet.num_states : cfg.inventory.num_states();
  const int A = cfg.problem == "garnet" ? cfg.garnet.num_actions : cfg.inventory.num_actions();
  const double gamma = cfg.problem == "garnet" ? cfg.garnet.gamma : cfg.inventory.gamma;
  const SrpgConfig smooth = SrpgConfig::smoothness_weights(S, A, gamma);
  // "smoothness" selects the smoothness-based weights.
  for (auto [key, target, smooth_value] :
       {std::tuple{"r1", &cfg.srpg.r1, smooth.r1}, std::tuple{"r2", &cfg.srpg.r2, smooth.r2}}) {
    if (!srpg.contains(key)) continue;
    if (srpg[key] == "smoothness") {
      *target = smooth_value;
    } else {
      read(srpg, key, *target, "srpg");
    }
  }
  cfg.srpg.iterations = static_cast<int>(cfg.total_update_budget / 2);
  cfg.drpg.total_update_budget = cfg.total_update_budget;

  validate(cfg.srpg);
  validate(cfg.drpg);
  validate(cfg.eval.pgm);
  return cfg;
}

std::vector<Json> expand_grid(const Json& j) {
  std::vector<Json> out{j};
  for (const char* section : {"srpg", "drpg", "evaluation"}) {
    if (!j.contains(section) || !j[section].is_object()) continue;
    for (const auto& item : j[section].items()) {
      if (!item.value().is_array()) continue;
      if (item.value().empty()) {
        throw InvalidInput(std::string("config: empty grid for '") + section + "." +
                           item.key() + "'");
      }
      std::vector<Json> next;
      for (const Json& base : out) {
        for (const Json& value : item.value()) {
          Json variant = base;
          variant[section][item.key()] = value;
          next.push_back(std::move(variant));
        }
      }
      out = std::move(next);
    }
  }
  return out;
}

Instance build_instance(const ExperimentConfig& cfg) {
  if (cfg.problem == "inventory") {
    return make_inventory_instance(InventoryModel::generate(cfg.inventory, cfg.instance_seed));
  }
  TabularRmdp mdp = generate_garnet(cfg.garnet, cfg.instance_seed);
  Vector kappa;
  if (cfg.set_kind == SetKind::kSRect || cfg.set_kind == SetKind::kSaRect) {
    kappa = sample_kappa(cfg.set_kind, mdp.num_states(), mdp.num_actions(),
                         cfg.kappa_lo, cfg.kappa_hi, cfg.kappa_seed);
  }
  AmbiguitySet set = make_garnet_set(mdp, cfg.set_kind, kappa);
  return make_garnet_instance(std::move(mdp), std::move(set));
}

std::vector<SummaryRow> summarize(const std::vector<const RunTrace*>& traces) {
  std::map<std::int64_t, std::vector<double>> by_count;
  for (const RunTrace* trace : traces) {
    for (const auto& r : trace->records) by_count[r.update_count].push_back(r.phi);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [count, values] : by_count) {
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double half = 0.0;
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    rows.push_back(SummaryRow{count, mean, half, static_cast<int>(values.size())});
  }
  return rows;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string trace_csv(const RunOutcome& run) {
  std::ostringstream os;
  os << kTraceHeader << '\n';
  for (const auto& r : run.trace.records) {
    os << run.run_id << ',' << run.seed << ',' << r.iter << ',' << r.update_count << ','
       << format_double(r.phi) << ',' << format_double(r.stat_res_pi) << ','
       << format_double(r.stat_res_p) << ',' << format_double(r.wall_ms) << '\n';
  }
  return os.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    os << r.update_count << ',' << format_double(r.mean_phi) << ','
       << format_double(r.ci_half_width) << ','
       << format_double(r.mean_phi - r.ci_half_width) << ','
       << format_double(r.mean_phi + r.ci_half_width) << ',' << r.num_runs << '\n';
  }
  return os.str();
}

namespace {

struct Task {
  std::string algorithm;
  std::uint64_t seed;
};

Matrix random_policy_rows(Rng& rng, int S, int A) {
  Matrix m(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) m(s, a) = rng.uniform() + 1e-3;
    m.row(s) /= m.row(s).sum();
  }
  return m;
}

RunTrace run_tabular(const ExperimentConfig& cfg, const Instance& inst,
                     const std::string& algorithm, std::uint64_t seed) {
  const TabularRmdp& mdp = *inst.mdp;
  Rng rng(derive_seed(seed, 1));
  const Policy pi0(random_policy_rows(rng, mdp.num_states(), mdp.num_actions()));
  if (algorithm == "srpg") {
    SrpgConfig sc = cfg.srpg;
    sc.seed = derive_seed(seed, 2);
    return srpg_run(mdp, inst.set, pi0, mdp.nominal(), sc, cfg.eval).trace;
  }
  DrpgConfig dc = cfg.drpg;
  dc.seed = seed;
  return drpg_run(mdp, inst.set, pi0, mdp.nominal(), dc, cfg.eval).trace;
}

RunTrace run_inventory(const ExperimentConfig& cfg, const Instance& inst,
                       const std::string& algorithm, std::uint64_t seed) {
  const InventoryModel& model = *inst.inventory;
  const PolicyCoordinates coords(model, cfg.policy_param);
  Rng rng(derive_seed(seed, 1));
  Vector x0(coords.dim());
  if (cfg.policy_param == PolicyParam::kSoftmax) {
    for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = rng.uniform(-2.0, 2.0);
  } else {
    x0 = coords.from_policy(
        Policy(random_policy_rows(rng, model.mdp().num_states(), model.mdp().num_actions())));
  }
  if (algorithm == "srpg") {
    SrpgConfig sc = cfg.srpg;
    sc.seed = derive_seed(seed, 2);
    return srpg_run_xi(model, cfg.policy_param, x0, model.center(), sc, cfg.eval).trace;
  }
  DrpgConfig dc = cfg.drpg;
  dc.seed = seed;
  return drpg_run_xi(model, cfg.policy_param, x0, model.center(), dc, cfg.eval).trace;
}

}  // namespace

std::vector<RunOutcome> run_all(const ExperimentConfig& cfg, const Instance& instance,
                                int jobs) {
  std::vector<Task> tasks;
  for (const char* algorithm : {"srpg", "drpg"}) {
    if (std::string(algorithm) == "srpg" ? !cfg.runs_srpg() : !cfg.runs_drpg()) continue;
    for (int i = 0; i < cfg.num_seeds; ++i) {
      tasks.push_back(Task{algorithm, cfg.base_seed + static_cast<std::uint64_t>(i)});
    }
  }

  std::vector<RunOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& task = tasks[i];
      RunOutcome& out = outcomes[i];
      out.algorithm = task.algorithm;
      out.seed = task.seed;
      out.run_id = task.algorithm + "_seed" + std::to_string(task.seed);
      const auto start = std::chrono::steady_clock::now();
      try {
        out.trace = instance.inventory ? run_inventory(cfg, instance, task.algorithm, task.seed)
                                       : run_tabular(cfg, instance, task.algorithm, task.seed);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      out.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    }
  };

  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return outcomes;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << contents;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir, int jobs) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "runs");

  const Instance instance = build_instance(cfg);
  const std::string instance_text = instance_to_json(instance).dump(2) + "\n";
  write_file(out_dir / "instance.json", instance_text);

  ExperimentReport report{out_dir, run_all(cfg, instance, jobs), 0};

  Json manifest{{"config", cfg.raw},
                {"instance", {{"file", "instance.json"},
                              {"fnv1a64", hex64(fnv1a64(instance_text))}}},
                {"runs", Json::array()}};
  Json seeds = Json::array();
  for (int i = 0; i < cfg.num_seeds; ++i) seeds.push_back(cfg.base_seed + i);
  manifest["seeds"] = seeds;

  std::map<std::string, std::vector<const RunTrace*>> by_algorithm;
  for (const RunOutcome& run : report.runs) {
    Json entry{{"run_id", run.run_id}, {"algorithm", run.algorithm},
               {"seed", run.seed}, {"wall_ms", run.wall_ms}};
    if (run.error) {
      entry["status"] = "error";
      entry["error"] = *run.error;
      report.exit_code = 3;
    } else {
      entry["status"] = "ok";
      entry["file"] = "runs/" + run.run_id + ".csv";
      write_file(out_dir / "runs" / (run.run_id + ".csv"), trace_csv(run));
      by_algorithm[run.algorithm].push_back(&run.trace);
    }
    manifest["runs"].push_back(std::move(entry));
  }
  for (const auto& [algorithm, traces] : by_algorithm) {
    write_file(out_dir / ("summary_" + algorithm + ".csv"), summary_csv(summarize(traces)));
  }
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return report;
}

std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag,
                                         const ExperimentConfig& cfg) {
  if (flag && !flag->empty()) return *flag;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("RMDP_OUTPUT_DIR"); env && *env) return env;
  return "rmdp_out";
}

}  // namespace rmdp
