#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rmdp/drpg.hpp"
#include "rmdp/garnet.hpp"
#include "rmdp/instance_io.hpp"
#include "rmdp/inventory.hpp"
#include "rmdp/srpg.hpp"

namespace rmdp {

// Parsed experiment configuration. docs/FORMATS.md documents the JSON keys.
struct ExperimentConfig {
  std::string problem = "garnet";  // garnet | inventory
  GarnetParams garnet;
  InventorySpec inventory = InventorySpec::defaults();
  PolicyParam policy_param = PolicyParam::kSoftmax;  // inventory only
  std::uint64_t instance_seed = 0;

  SetKind set_kind = SetKind::kSRect;
  double kappa_lo = 0.1;
  double kappa_hi = 0.5;
  std::uint64_t kappa_seed = 0;

  std::string algorithm = "both";  // srpg | drpg | both
  SrpgConfig srpg;                 // iterations derived from the budget
  DrpgConfig drpg;
  EvalOptions eval;

  std::int64_t total_update_budget = 500;
  int num_seeds = 10;
  std::uint64_t base_seed = 0;
  std::string output_dir;  // empty: --out flag, then $RMDP_OUTPUT_DIR

  Json raw;  // echoed into the manifest

  bool runs_srpg() const { return algorithm == "srpg" || algorithm == "both"; }
  bool runs_drpg() const { return algorithm == "drpg" || algorithm == "both"; }
};

// Throws InvalidInput with the offending key on any schema violation.
ExperimentConfig parse_config(const Json& j);

// Expands list-valued hyperparameters in the srpg, drpg and evaluation
// sections into their cartesian product. A config without lists yields
// itself.
std::vector<Json> expand_grid(const Json& j);

// Builds the instance described by a config (deterministic in its seeds).
Instance build_instance(const ExperimentConfig& cfg);

struct RunOutcome {
  std::string run_id;
  std::string algorithm;
  std::uint64_t seed = 0;
  RunTrace trace;
  std::optional<std::string> error;
  double wall_ms = 0.0;
};

struct SummaryRow {
  std::int64_t update_count;
  double mean_phi;
  double ci_half_width;  // 1.96 * sample std / sqrt(n)
  int num_runs;
};

// Mean and normal-approximation 95% CI of phi across runs, per update count.
std::vector<SummaryRow> summarize(const std::vector<const RunTrace*>& traces);

// 17 significant digits, round-trip exact.
std::string format_double(double x);

inline constexpr const char* kTraceHeader =
    "run_id,seed,iter,update_count,phi,stat_res_pi,stat_res_p,wall_ms";
inline constexpr const char* kSummaryHeader =
    "update_count,mean_phi,ci_half_width,ci_lower,ci_upper,num_runs";

std::string trace_csv(const RunOutcome& run);
std::string summary_csv(const std::vector<SummaryRow>& rows);

// Runs seed base_seed + i for every requested algorithm.
std::vector<RunOutcome> run_all(const ExperimentConfig& cfg, const Instance& instance,
                                int jobs);

struct ExperimentReport {
  std::filesystem::path output_dir;
  std::vector<RunOutcome> runs;
  int exit_code = 0;  // 0 if every run succeeded
};

// Writes instance.json, runs/<run_id>.csv, summary_<algorithm>.csv and
// manifest.json under out_dir.
ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir, int jobs);

// Resolves the output directory: explicit flag, then the config, then
// $RMDP_OUTPUT_DIR, then ./rmdp_out.
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag,
                                         const ExperimentConfig& cfg);

}  // namespace rmdp
