#pragma once

#include <cstdint>
#include <vector>

#include "rmdp/ambiguity.hpp"
#include "rmdp/drpg.hpp"
#include "rmdp/srpg.hpp"
#include "rmdp/tabular.hpp"

namespace rmdp {

// Parameterized inventory instance. States are (storing, selling) pairs and
// actions are order quantities; the kernel is an exponential tilt of a
// GARNET nominal kernel by radial features.
struct InventorySpec {
  std::vector<Eigen::Vector2d> states;
  std::vector<double> actions;
  int branching = 5;
  double gamma = 0.95;
  Vector theta_center;
  Vector lambda_center;
  double kappa_theta = 1.0;
  double kappa_lambda = 1.0;
  std::vector<Eigen::Vector2d> theta_feature_centers;   // m of them
  std::vector<Eigen::Vector2d> lambda_state_centers;    // n of them
  std::vector<double> lambda_action_centers;            // n of them
  double sigma_theta = 1.0;
  double sigma_lambda = 2.0;
  double cost_lo = 0.0;
  double cost_hi = 5.0;

  // S = 8, A = 3, b = 5 with two features per parameter block.
  static InventorySpec defaults();

  int num_states() const { return static_cast<int>(states.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }
  int theta_dim() const { return static_cast<int>(theta_feature_centers.size()); }
  int lambda_dim() const { return static_cast<int>(lambda_state_centers.size()); }

  void validate() const;
};

// Radial state feature phi_theta(s') in R^m.
Vector feature_theta(const InventorySpec& spec, int next_state);
// Radial state-action feature phi_lambda(s, a) in R^n.
Vector feature_lambda(const InventorySpec& spec, int state, int action);

// Kernel parameters xi = (theta, lambda).
struct XiParams {
  Vector theta;
  Vector lambda;

  Vector flat() const;
  static XiParams from_flat(const Vector& flat, int theta_dim);
};

using XiGradient = XiParams;

class InventoryModel {
 public:
  InventoryModel(InventorySpec spec, TabularRmdp mdp);

  // Nominal kernel and costs from a GARNET(S, A, b) draw; rho uniform.
  static InventoryModel generate(const InventorySpec& spec, std::uint64_t seed);

  const InventorySpec& spec() const { return spec_; }
  const TabularRmdp& mdp() const { return mdp_; }
  const Matrix& theta_features() const { return theta_features_; }    // S x m
  const Matrix& lambda_features() const { return lambda_features_; }  // (S*A) x n
  XiParams center() const { return {spec_.theta_center, spec_.lambda_center}; }

  // lambda^T phi_lambda(s, a) for every row s*A + a.
  Vector temperatures(const XiParams& xi) const;

 private:
  InventorySpec spec_;
  TabularRmdp mdp_;
  Matrix theta_features_;
  Matrix lambda_features_;
};

// p^xi_{sas'} proportional to pbar_{sas'} exp(theta^T phi_theta(s') / lambda_sa).
TransitionKernel kernel_from_xi(const InventoryModel& model, const XiParams& xi);

// Score d log p^xi_{sas'} / d(theta, lambda).
XiGradient grad_log_kernel(const InventoryModel& model, const XiParams& xi,
                           int state, int action, int next_state);

// dJ(pi, p^xi) / d(theta, lambda).
XiGradient grad_j_xi(const InventoryModel& model, const Policy& policy,
                     const XiParams& xi);

// Softmax policy pi_{sa} proportional to exp(w^T phi_lambda(s, a)).
Policy policy_from_w(const InventoryModel& model, const Vector& w);
// dJ(pi_w, p^xi) / dw by the chain rule through grad_pi.
Vector grad_j_w(const InventoryModel& model, const Vector& w, const XiParams& xi);

// Projection onto the L1 balls around (theta_c, lambda_c), with lambda kept
// above kLambdaMin.
XiParams project_xi(const InventorySpec& spec, const XiParams& raw);
bool xi_feasible(const InventorySpec& spec, const XiParams& xi, double tol);

struct XiPgmResult {
  XiParams xi;
  double value;
  int iterations;
};

// Projected gradient ascent in xi-space with the kernel PGM stopping rule.
XiPgmResult pgm_maximize_xi(const InventoryModel& model, const Policy& policy,
                            const XiParams& start, const PgmConfig& cfg);
// phi(pi) over the parameterized set, starting at the center.
double robust_value_xi(const InventoryModel& model, const Policy& policy,
                       const PgmConfig& cfg);

enum class PolicyParam { kTabular, kSoftmax };

std::string to_string(PolicyParam param);
PolicyParam policy_param_from_string(const std::string& name);

// Policy coordinates: a row-major flattened S x A matrix for kTabular, the
// softmax weights w for kSoftmax.
class PolicyCoordinates {
 public:
  PolicyCoordinates(const InventoryModel& model, PolicyParam param)
      : model_(&model), param_(param) {}

  PolicyParam param() const { return param_; }
  int dim() const;
  Policy to_policy(const Vector& x) const;
  Vector from_policy(const Policy& policy) const;  // kTabular only
  Vector project(const Vector& x) const;
  Vector gradient(const Vector& x, const XiParams& xi) const;

 private:
  const InventoryModel* model_;
  PolicyParam param_;
};

struct XiRunResult {
  RunTrace trace;
  Vector final_coords;  // anchor for SRPG, iterate for DRPG
  XiParams final_xi;
  Policy final_policy;
};

// The single-loop method in (policy coordinates, xi) space.
XiRunResult srpg_run_xi(const InventoryModel& model, PolicyParam param,
                        const Vector& x0, const XiParams& xi0,
                        const SrpgConfig& cfg, const EvalOptions& eval);

// The double-loop baseline in (policy coordinates, xi) space.
XiRunResult drpg_run_xi(const InventoryModel& model, PolicyParam param,
                        const Vector& x0, const XiParams& xi0,
                        const DrpgConfig& cfg, const EvalOptions& eval);

}  // namespace rmdp
