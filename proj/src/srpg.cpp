#include "rmdp/srpg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "rmdp/geometry.hpp"
#include "rmdp/gradients.hpp"
#include "rmdp/rng.hpp"

namespace rmdp {

double RunTrace::area_under_curve() const {
  double area = 0.0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const double width =
        static_cast<double>(records[i].update_count - records[i - 1].update_count);
    area += 0.5 * width * (records[i].phi + records[i - 1].phi);
  }
  return area;
}

double RunTrace::min_stationarity(int max_iter) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (r.iter <= max_iter) best = std::min(best, std::max(r.stat_res_pi, r.stat_res_p));
  }
  return best;
}

SrpgConfig SrpgConfig::smoothness_weights(int num_states, int num_actions, double gamma) {
  const auto c = smoothness_constants(num_states, num_actions, gamma);
  SrpgConfig cfg;
  cfg.r1 = 2.0 * c.l_pi_smooth;
  cfg.r2 = 2.0 * c.l_p_smooth;
  return cfg;
}

SrpgConfig SrpgConfig::theoretical(int num_states, int num_actions,
                                   double gamma, int iterations) {
  const auto c = smoothness_constants(num_states, num_actions, gamma);
  // Common smoothness constant L with cross-smoothness ratio one.
  const double L = std::max(c.l_pi_smooth, c.l_p_smooth);
  SrpgConfig cfg;
  cfg.iterations = iterations;
  cfg.r1 = 2.0 * L;
  cfg.r2 = 2.0 * L;
  cfg.tau = std::min(4.0 / (3.0 * (L + cfg.r1)), 1.0 / (6.0 * L));
  cfg.sigma = 1.0 / (5.0 * std::sqrt(6.0) * L);
  const double r1 = cfg.r1;
  cfg.beta = std::min({24.0 * r1 / (360.0 * r1 + 5.0 * r1 * r1 +
                                    (2.0 * L + 5.0 * r1) * (2.0 * L + 5.0 * r1)),
                       cfg.sigma * L * L / (384.0 * r1 * 6.0 * 4.0),
                       1.0 / std::sqrt(std::max(1, iterations))});
  cfg.mu = std::min({6.0 / (12.0 + L * L), 6.0 / (cfg.sigma * L * L),
                     cfg.sigma * L * L / (64.0 * cfg.r2 * 6.0)});
  return cfg;
}

void validate(const SrpgConfig& cfg) {
  if (!(cfg.tau >= 0.0 && cfg.sigma >= 0.0)) {
    throw InvalidInput("srpg: step sizes must be nonnegative");
  }
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0 && cfg.mu > 0.0 && cfg.mu < 1.0)) {
    throw InvalidInput("srpg: beta and mu must lie in (0, 1)");
  }
  if (!(cfg.r1 >= 0.0 && cfg.r2 >= 0.0)) {
    throw InvalidInput("srpg: proximal weights must be nonnegative");
  }
  if (cfg.iterations < 0) throw InvalidInput("srpg: negative iteration budget");
}

SrpgState SrpgState::initial(Policy pi0, TransitionKernel p0) {
  Matrix pi_anchor = pi0.matrix();
  Matrix p_anchor = p0.matrix();
  return SrpgState{std::move(pi0), std::move(p0), std::move(pi_anchor),
                   std::move(p_anchor), 0};
}

Matrix chi_grad_pi(const TabularRmdp& mdp, const SrpgState& state,
                   const SrpgConfig& cfg) {
  return grad_pi(mdp, state.pi, state.p) +
         cfg.r1 * (state.pi.matrix() - state.pi_anchor);
}

Matrix chi_grad_p(const TabularRmdp& mdp, const SrpgState& state,
                  const SrpgConfig& cfg) {
  return grad_p(mdp, state.pi, state.p) -
         cfg.r2 * (state.p.matrix() - state.p_anchor);
}

SrpgState srpg_step(const TabularRmdp& mdp, const AmbiguitySet& set,
                    const SrpgState& state, const SrpgConfig& cfg) {
  const Matrix pi_direction = chi_grad_pi(mdp, state, cfg);
  Policy pi_next(project_policy_rows(state.pi.matrix() - cfg.tau * pi_direction));

  SrpgState next{std::move(pi_next), state.p, state.pi_anchor, state.p_anchor,
                 state.k + 1};
  const Matrix p_direction = chi_grad_p(mdp, next, cfg);
  next.p = set.project_kernel(state.p.matrix() + cfg.sigma * p_direction);

  next.pi_anchor += cfg.beta * (next.pi.matrix() - state.pi_anchor);
  next.p_anchor += cfg.mu * (next.p.matrix() - state.p_anchor);
  return next;
}

StationarityResiduals stationarity_residuals(const TabularRmdp& mdp,
                                             const Policy& policy,
                                             const TransitionKernel& kernel,
                                             const AmbiguitySet& set,
                                             double eta) {
  if (!(eta > 0.0)) throw InvalidInput("stationarity: eta must be positive");
  check_shapes(mdp, policy, kernel);
  const JointGradient g =
      ambient::gradients(mdp, policy.matrix(), kernel.matrix());
  const Matrix& pi = policy.matrix();
  const Matrix& p = kernel.matrix();
  const double res_pi = (pi - project_policy_rows(pi - eta * g.pi)).norm() / eta;
  const double res_p = (p - set.project(p + eta * g.p)).norm() / eta;
  return {res_pi, res_p};
}

SrpgResult srpg_run(const TabularRmdp& mdp, const AmbiguitySet& set,
                    const Policy& pi0, const TransitionKernel& p0,
                    const SrpgConfig& cfg, const EvalOptions& eval) {
  validate(cfg);
  validate(eval.pgm);
  if (eval.eval_every <= 0) throw InvalidInput("srpg: eval_every must be positive");
  if (!set.is_tabular()) {
    throw std::logic_error("srpg_run needs a tabular set; use srpg_run_xi");
  }
  check_shapes(mdp, pi0, p0);
  if (!set.contains(p0, 1e-6)) throw InvalidInput("srpg: p0 is outside the set");

  const int K = cfg.iterations;
  Rng rng(cfg.seed);
  const int sampled_index = K > 0 ? 1 + static_cast<int>(rng.uniform_int(K)) : 0;

  Stopwatch clock(eval.record_timing);
  SrpgState state = SrpgState::initial(pi0, p0);
  std::optional<Policy> sampled;
  RunTrace trace;

  const double eta = cfg.tau > 0.0 ? cfg.tau : 1.0;
  auto record = [&](const SrpgState& s) {
    const Policy anchor(project_policy_rows(s.pi_anchor));
    const auto res = stationarity_residuals(mdp, s.pi, s.p, set, eta);
    trace.records.push_back(TraceRecord{
        .iter = s.k,
        .update_count = 2 * static_cast<std::int64_t>(s.k),
        .phi = robust_value(mdp, anchor, set, eval.pgm),
        .stat_res_pi = res.pi,
        .stat_res_p = res.p,
        .wall_ms = clock.elapsed_ms(),
    });
  };

  record(state);
  if (K == 0) sampled.emplace(project_policy_rows(state.pi_anchor));
  for (int k = 1; k <= K; ++k) {
    state = srpg_step(mdp, set, state, cfg);
    if (k == sampled_index) sampled.emplace(project_policy_rows(state.pi_anchor));
    if (k % eval.eval_every == 0 || k == K) record(state);
  }

  Policy final_anchor(project_policy_rows(state.pi_anchor));
  return SrpgResult{std::move(trace), std::move(state), std::move(final_anchor),
                    std::move(*sampled), sampled_index};
}

}  // namespace rmdp
