#pragma once

#include <cstdint>

#include "rmdp/ambiguity.hpp"
#include "rmdp/srpg.hpp"
#include "rmdp/trace.hpp"

namespace rmdp {

struct DrpgConfig {
  double outer_step = 0.05;
  std::int64_t total_update_budget = 500;
  // Inner maximizer, stopping on the change in J at 1e-4 or after 200 steps.
  PgmConfig inner{.value_only_stop = true};
  std::uint64_t seed = 0;
};

void validate(const DrpgConfig& cfg);

struct DrpgResult {
  RunTrace trace;
  Policy final_policy;
  TransitionKernel final_kernel;
  int outer_steps = 0;
  std::int64_t inner_iterations = 0;
};

// Double-loop baseline: warm-started PGM for the worst-case kernel, then one
// projected policy-gradient step, until the update budget is spent. Each
// inner PGM iteration is one dual update and each policy step one primal
// update. phi is recorded every 2 * eval_every updates so traces line up
// with srpg_run.
DrpgResult drpg_run(const TabularRmdp& mdp, const AmbiguitySet& set,
                    const Policy& pi0, const TransitionKernel& p0,
                    const DrpgConfig& cfg, const EvalOptions& eval);

}  // namespace rmdp
