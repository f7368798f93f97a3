#include "rmdp/drpg.hpp"

#include <optional>

#include "rmdp/geometry.hpp"
#include "rmdp/gradients.hpp"

namespace rmdp {

void validate(const DrpgConfig& cfg) {
  if (!(cfg.outer_step > 0.0)) throw InvalidInput("drpg: outer step must be positive");
  if (cfg.total_update_budget < 0) throw InvalidInput("drpg: negative budget");
  validate(cfg.inner);
}

DrpgResult drpg_run(const TabularRmdp& mdp, const AmbiguitySet& set,
                    const Policy& pi0, const TransitionKernel& p0,
                    const DrpgConfig& cfg, const EvalOptions& eval) {
  validate(cfg);
  validate(eval.pgm);
  if (eval.eval_every <= 0) throw InvalidInput("drpg: eval_every must be positive");
  if (!set.is_tabular()) {
    throw std::logic_error("drpg_run needs a tabular set; use drpg_run_xi");
  }
  check_shapes(mdp, pi0, p0);
  if (!set.contains(p0, 1e-6)) throw InvalidInput("drpg: p0 is outside the set");

  const std::int64_t cadence = 2 * static_cast<std::int64_t>(eval.eval_every);
  const std::int64_t budget = cfg.total_update_budget;
  Stopwatch clock(eval.record_timing);

  Policy pi = pi0;
  TransitionKernel worst = p0;
  std::int64_t updates = 0;
  int outer = 0;
  std::int64_t inner_total = 0;
  RunTrace trace;

  // phi and residuals only change when pi or the worst-case kernel does.
  std::optional<double> phi_cache;
  auto record = [&] {
    if (!phi_cache) phi_cache = robust_value(mdp, pi, set, eval.pgm);
    const auto res = stationarity_residuals(mdp, pi, worst, set, cfg.outer_step);
    trace.records.push_back(TraceRecord{
        .iter = outer,
        .update_count = updates,
        .phi = *phi_cache,
        .stat_res_pi = res.pi,
        .stat_res_p = res.p,
        .wall_ms = clock.elapsed_ms(),
    });
  };
  // Records every cadence point crossed while advancing to `target`.
  auto advance = [&](std::int64_t target) {
    std::int64_t next_mark = (updates / cadence + 1) * cadence;
    while (next_mark <= target) {
      updates = next_mark;
      record();
      next_mark += cadence;
    }
    updates = target;
  };

  record();
  while (updates < budget) {
    PgmConfig inner = cfg.inner;
    inner.max_iters = static_cast<int>(
        std::min<std::int64_t>(inner.max_iters, budget - updates));
    PgmResult solved = pgm_maximize(mdp, pi, set, worst, inner);
    worst = std::move(solved.kernel);
    inner_total += solved.iterations;
    advance(updates + solved.iterations);
    if (updates >= budget) break;

    const Matrix g = grad_pi(mdp, pi, worst);
    pi = Policy(project_policy_rows(pi.matrix() - cfg.outer_step * g));
    ++outer;
    phi_cache.reset();
    advance(updates + 1);
  }
  // A tail without policy steps leaves phi unchanged; skip it.
  if (trace.records.back().iter != outer) record();

  return DrpgResult{std::move(trace), std::move(pi), std::move(worst), outer,
                    inner_total};
}

}  // namespace rmdp
