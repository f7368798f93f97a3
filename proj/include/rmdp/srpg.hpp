#pragma once

#include <cstdint>

#include "rmdp/ambiguity.hpp"
#include "rmdp/tabular.hpp"
#include "rmdp/trace.hpp"

namespace rmdp {

// Step sizes, averaging rates and proximal weights of the single-loop method.
struct SrpgConfig {
  double tau = 0.05;    // primal step
  double sigma = 0.05;  // dual step
  double beta = 0.1;    // policy anchor averaging rate
  double mu = 0.1;      // kernel anchor averaging rate
  double r1 = 1.0;      // proximal weight on ||pi - pi_bar||^2
  double r2 = 1.0;      // proximal weight on ||p - p_bar||^2
  int iterations = 250;
  std::uint64_t seed = 0;

  // Default steps with r1 = 2 l_pi and r2 = 2 l_p. With tau * r1 in the
  // thousands the policy step overshoots badly, hence the unit defaults.
  static SrpgConfig smoothness_weights(int num_states, int num_actions, double gamma);
  // Step sizes satisfying the sufficient-decrease conditions of the
  // convergence analysis with a common smoothness constant. Very small.
  static SrpgConfig theoretical(int num_states, int num_actions, double gamma,
                                int iterations);
};

void validate(const SrpgConfig& cfg);

struct SrpgState {
  Policy pi;
  TransitionKernel p;
  Matrix pi_anchor;  // not required to be stochastic
  Matrix p_anchor;
  int k = 0;

  static SrpgState initial(Policy pi0, TransitionKernel p0);
};

// grad_pi J(pi_k, p_k) + r1 (pi_k - pi_bar_k).
Matrix chi_grad_pi(const TabularRmdp& mdp, const SrpgState& state,
                   const SrpgConfig& cfg);
// grad_p J(pi, p_k) - r2 (p_k - p_bar_k), where state.pi already holds the
// updated policy.
Matrix chi_grad_p(const TabularRmdp& mdp, const SrpgState& state,
                  const SrpgConfig& cfg);

// One iteration: policy descent, kernel ascent at the new policy, then the
// two anchor averages.
SrpgState srpg_step(const TabularRmdp& mdp, const AmbiguitySet& set,
                    const SrpgState& state, const SrpgConfig& cfg);

struct StationarityResiduals {
  double pi;
  double p;
};

// Gradient-mapping residuals ||x - Proj(x -/+ eta grad)|| / eta for the
// policy (descent) and the kernel (ascent).
StationarityResiduals stationarity_residuals(const TabularRmdp& mdp,
                                             const Policy& policy,
                                             const TransitionKernel& kernel,
                                             const AmbiguitySet& set,
                                             double eta);

struct EvalOptions {
  PgmConfig pgm;
  int eval_every = 10;
  bool record_timing = false;
};

struct SrpgResult {
  RunTrace trace;
  SrpgState final_state;
  Policy final_anchor;    // rows of pi_bar_K projected onto the simplex
  Policy sampled_anchor;  // pi_bar_j for j drawn uniformly from 1..K
  int sampled_index = 0;
};

// Runs cfg.iterations steps from (pi0, p0) with anchors initialized to the
// iterates, recording phi at the anchor policy every eval_every iterations
// and at the last one.
SrpgResult srpg_run(const TabularRmdp& mdp, const AmbiguitySet& set,
                    const Policy& pi0, const TransitionKernel& p0,
                    const SrpgConfig& cfg, const EvalOptions& eval);

}  // namespace rmdp
