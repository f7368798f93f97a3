// Command-line front end: run experiments, generate instances, evaluate policies.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "rmdp/harness.hpp"

namespace {

using rmdp::Json;

int cmd_run(const std::string& config_path, int jobs,
            const std::optional<std::string>& out_flag) {
  const Json raw = rmdp::read_json_file(config_path);
  const std::vector<Json> variants = rmdp::expand_grid(raw);
  std::vector<rmdp::ExperimentConfig> configs;
  for (const Json& v : variants) configs.push_back(rmdp::parse_config(v));

  const auto root = rmdp::resolve_output_dir(out_flag, configs.front());
  int exit_code = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto dir = root;
    if (configs.size() > 1) {
      char name[32];
      std::snprintf(name, sizeof(name), "grid_%03zu", i);
      dir /= name;
    }
    const auto report = rmdp::run_experiment(configs[i], dir, jobs);
    for (const auto& run : report.runs) {
      if (run.error) std::cerr << run.run_id << ": " << *run.error << '\n';
    }
    std::cout << "wrote " << report.output_dir.string() << " (" << report.runs.size()
              << " runs)\n";
    if (report.exit_code != 0) exit_code = report.exit_code;
  }
  return exit_code;
}

int cmd_evaluate(const std::string& instance_path, const std::string& policy_path,
                 const rmdp::PgmConfig& pgm) {
  const rmdp::Instance instance = rmdp::load_instance(instance_path);
  const rmdp::Policy policy =
      rmdp::policy_from_json(rmdp::read_json_file(policy_path), instance);
  const double phi =
      instance.inventory ? rmdp::robust_value_xi(*instance.inventory, policy, pgm)
                         : rmdp::robust_value(*instance.mdp, policy, instance.set, pgm);
  std::cout << rmdp::format_double(phi) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust MDP policy-gradient toolkit"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  std::string config_path;
  int jobs = 1;
  std::optional<std::string> out_dir;
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--jobs,-j", jobs, "Parallel runs across seeds")->check(CLI::PositiveNumber);
  run->add_option("--out,-o", out_dir, "Output directory (overrides config and RMDP_OUTPUT_DIR)");

  auto* gen = app.add_subcommand("generate", "Emit an instance JSON");
  std::string problem;
  std::uint64_t seed = 0;
  std::string set_kind = "s_rect";
  rmdp::GarnetParams garnet;
  std::vector<double> kappa_range{0.1, 0.5};
  std::uint64_t kappa_seed = 0;
  std::string spec_path;
  std::optional<std::string> gen_out;
  gen->add_option("problem", problem, "garnet or inventory")
      ->required()
      ->check(CLI::IsMember({"garnet", "inventory"}));
  gen->add_option("--seed", seed, "Instance seed")->required();
  gen->add_option("--states", garnet.num_states, "GARNET states");
  gen->add_option("--actions", garnet.num_actions, "GARNET actions");
  gen->add_option("--branching", garnet.branching, "GARNET successors per pair");
  gen->add_option("--gamma", garnet.gamma, "Discount factor");
  gen->add_option("--set", set_kind, "singleton, s_rect or sa_rect")
      ->check(CLI::IsMember({"singleton", "s_rect", "sa_rect"}));
  gen->add_option("--kappa-range", kappa_range, "Radius range lo hi")->expected(2);
  gen->add_option("--kappa-seed", kappa_seed, "Radius seed");
  gen->add_option("--spec", spec_path, "Inventory spec JSON (defaults otherwise)")
      ->check(CLI::ExistingFile);
  gen->add_option("--out,-o", gen_out, "Output file (stdout otherwise)");

  auto* eval = app.add_subcommand("evaluate", "Print the worst-case return of a policy");
  std::string instance_path;
  std::string policy_path;
  rmdp::PgmConfig pgm;
  eval->add_option("instance", instance_path, "Instance JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("policy", policy_path, "Policy JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--step", pgm.step, "Inner ascent step");
  eval->add_option("--max-iters", pgm.max_iters, "Inner iteration cap");
  eval->add_option("--rel-tol", pgm.rel_tol, "Inner relative tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, jobs, out_dir);
    if (*gen) {
      Json cfg{{"problem", {{"type", problem}, {"instance_seed", seed}}}};
      if (problem == "garnet") {
        cfg["problem"]["states"] = garnet.num_states;
        cfg["problem"]["actions"] = garnet.num_actions;
        cfg["problem"]["branching"] = garnet.branching;
        cfg["problem"]["gamma"] = garnet.gamma;
        cfg["ambiguity"] = {{"kind", set_kind},
                            {"kappa_range", kappa_range},
                            {"kappa_seed", kappa_seed}};
      } else if (!spec_path.empty()) {
        cfg["problem"]["inventory"] = rmdp::read_json_file(spec_path);
      }
      const auto instance = rmdp::build_instance(rmdp::parse_config(cfg));
      if (gen_out) {
        rmdp::save_instance(instance, *gen_out);
      } else {
        std::cout << rmdp::instance_to_json(instance).dump(2) << '\n';
      }
      return 0;
    }
    if (*eval) {
      rmdp::validate(pgm);
      return cmd_evaluate(instance_path, policy_path, pgm);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
