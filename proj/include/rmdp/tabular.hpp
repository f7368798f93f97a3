#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rmdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Raised when a caller hands in data that violates a type invariant.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Absolute tolerance on row sums accepted by validation; rows within it are
// renormalized, rows beyond it are rejected.
inline constexpr double kRowSumTolerance = 1e-9;

// Row-stochastic S x A matrix: probs(s, a) = pi(a | s).
class Policy {
 public:
  explicit Policy(Matrix probs);

  static Policy uniform(int num_states, int num_actions);

  const Matrix& matrix() const { return probs_; }
  int num_states() const { return static_cast<int>(probs_.rows()); }
  int num_actions() const { return static_cast<int>(probs_.cols()); }
  double operator()(int s, int a) const { return probs_(s, a); }

 private:
  Matrix probs_;
};

// Transition kernel stored as an (S*A) x S matrix; row s*A + a holds p_{sa}.
class TransitionKernel {
 public:
  TransitionKernel(int num_actions, Matrix rows);

  const Matrix& matrix() const { return rows_; }
  int num_states() const { return static_cast<int>(rows_.cols()); }
  int num_actions() const { return num_actions_; }
  int row_index(int s, int a) const { return s * num_actions_ + a; }
  auto row(int s, int a) const { return rows_.row(row_index(s, a)); }
  double operator()(int s, int a, int next) const {
    return rows_(row_index(s, a), next);
  }

 private:
  int num_actions_;
  Matrix rows_;
};

// The tuple (S, A, p, c, gamma, rho). Costs share the kernel layout:
// cost(s*A + a, s') = c_{s a s'}.
class TabularRmdp {
 public:
  TabularRmdp(int num_states, int num_actions, Matrix cost, double gamma,
              Vector initial_dist, TransitionKernel nominal);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  const Matrix& cost() const { return cost_; }
  double gamma() const { return gamma_; }
  const Vector& initial_dist() const { return rho_; }
  const TransitionKernel& nominal() const { return nominal_; }

  double cost(int s, int a, int next) const {
    return cost_(s * num_actions_ + a, next);
  }

  // Copy with costs mapped affinely from [lo, hi] onto [0, 1].
  TabularRmdp with_normalized_costs(double lo, double hi) const;
  // Same, using the observed cost range.
  TabularRmdp with_normalized_costs() const;

 private:
  int num_states_;
  int num_actions_;
  Matrix cost_;
  double gamma_;
  Vector rho_;
  TransitionKernel nominal_;
};

// Lipschitz and smoothness constants of J in pi and in p for costs in [0,1].
struct SmoothnessConstants {
  double l_pi_lip;
  double l_pi_smooth;
  double l_p_lip;
  double l_p_smooth;
};

SmoothnessConstants smoothness_constants(int num_states, int num_actions,
                                         double gamma);

// Everything derived from one factorization of I - gamma P_pi.
struct PolicyEvaluation {
  Vector value;      // v[s]
  Matrix q;          // q[s][a]
  Vector occupancy;  // d[s]
  double objective;  // J = rho . v
};

// Throws InvalidInput unless policy and kernel match the mdp's (S, A).
void check_shapes(const TabularRmdp& mdp, const Policy& policy,
                  const TransitionKernel& kernel);

Vector value_function(const TabularRmdp& mdp, const Policy& policy,
                      const TransitionKernel& kernel);
Matrix q_function(const TabularRmdp& mdp, const Policy& policy,
                  const TransitionKernel& kernel);
Vector occupancy_measure(const TabularRmdp& mdp, const Policy& policy,
                         const TransitionKernel& kernel);
double objective_j(const TabularRmdp& mdp, const Policy& policy,
                   const TransitionKernel& kernel);
PolicyEvaluation evaluate_policy(const TabularRmdp& mdp, const Policy& policy,
                                 const TransitionKernel& kernel);

// The same quantities on raw matrices, without stochasticity checks. J is a
// rational function of (pi, p) on the ambient space, and the analytic
// gradients are derivatives of this extension; finite-difference checks
// perturb single coordinates through these entry points.
namespace ambient {

Matrix policy_transition(const Matrix& policy, const Matrix& kernel);
Vector policy_cost(const Matrix& cost, const Matrix& policy,
                   const Matrix& kernel);
PolicyEvaluation evaluate(const TabularRmdp& mdp, const Matrix& policy,
                          const Matrix& kernel);
double objective_j(const TabularRmdp& mdp, const Matrix& policy,
                   const Matrix& kernel);

}  // namespace ambient

}  // namespace rmdp
