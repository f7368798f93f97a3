#include "rmdp/tabular.hpp"

#include <cmath>
#include <sstream>

namespace rmdp {
namespace {

// Clips tiny negatives, checks each row sums to one within tolerance and
// rescales it exactly onto the simplex.
void normalize_rows(Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entry");
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) < -kRowSumTolerance) {
        std::ostringstream os;
        os << what << ": negative entry " << m(r, c) << " at (" << r << ", "
           << c << ")";
        throw InvalidInput(os.str());
      }
      if (m(r, c) < 0.0) m(r, c) = 0.0;
    }
    const double sum = m.row(r).sum();
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os << what << ": row " << r << " sums to " << sum;
      throw InvalidInput(os.str());
    }
    m.row(r) /= sum;
  }
}

}  // namespace

Policy::Policy(Matrix probs) : probs_(std::move(probs)) {
  if (probs_.rows() == 0 || probs_.cols() == 0) {
    throw InvalidInput("policy: empty matrix");
  }
  normalize_rows(probs_, "policy");
}

Policy Policy::uniform(int num_states, int num_actions) {
  return Policy(Matrix::Constant(num_states, num_actions, 1.0 / num_actions));
}

TransitionKernel::TransitionKernel(int num_actions, Matrix rows)
    : num_actions_(num_actions), rows_(std::move(rows)) {
  if (num_actions_ <= 0 || rows_.cols() == 0 ||
      rows_.rows() != rows_.cols() * num_actions_) {
    throw InvalidInput("kernel: expected (S*A) x S rows");
  }
  normalize_rows(rows_, "kernel");
}

TabularRmdp::TabularRmdp(int num_states, int num_actions, Matrix cost,
                         double gamma, Vector initial_dist,
                         TransitionKernel nominal)
    : num_states_(num_states),
      num_actions_(num_actions),
      cost_(std::move(cost)),
      gamma_(gamma),
      rho_(std::move(initial_dist)),
      nominal_(std::move(nominal)) {
  if (num_states_ <= 0 || num_actions_ <= 0) {
    throw InvalidInput("mdp: S and A must be positive");
  }
  if (cost_.rows() != num_states_ * num_actions_ || cost_.cols() != num_states_) {
    throw InvalidInput("mdp: cost must be (S*A) x S");
  }
  if (!cost_.allFinite()) throw InvalidInput("mdp: non-finite cost");
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) {
    throw InvalidInput("mdp: discount must lie in (0, 1)");
  }
  if (rho_.size() != num_states_) {
    throw InvalidInput("mdp: initial distribution has wrong length");
  }
  Matrix rho_row = rho_.transpose();
  normalize_rows(rho_row, "initial distribution");
  rho_ = rho_row.transpose();
  if (nominal_.num_states() != num_states_ ||
      nominal_.num_actions() != num_actions_) {
    throw InvalidInput("mdp: nominal kernel shape mismatch");
  }
}

TabularRmdp TabularRmdp::with_normalized_costs(double lo, double hi) const {
  if (!(hi > lo)) throw InvalidInput("normalize: empty cost range");
  Matrix scaled = (cost_.array() - lo) / (hi - lo);
  if (scaled.minCoeff() < -1e-12 || scaled.maxCoeff() > 1.0 + 1e-12) {
    throw InvalidInput("normalize: costs fall outside the given range");
  }
  scaled = scaled.cwiseMax(0.0).cwiseMin(1.0);
  return TabularRmdp(num_states_, num_actions_, std::move(scaled), gamma_, rho_,
                     nominal_);
}

TabularRmdp TabularRmdp::with_normalized_costs() const {
  const double lo = cost_.minCoeff();
  const double hi = cost_.maxCoeff();
  if (hi == lo) {
    // Constant costs: any affine map onto [0, 1] works, pick the clamp.
    Matrix clamped = cost_.cwiseMax(0.0).cwiseMin(1.0);
    return TabularRmdp(num_states_, num_actions_, std::move(clamped), gamma_,
                       rho_, nominal_);
  }
  return with_normalized_costs(lo, hi);
}

SmoothnessConstants smoothness_constants(int num_states, int num_actions,
                                         double gamma) {
  const double g1 = 1.0 - gamma;
  const double s = num_states;
  const double a = num_actions;
  return SmoothnessConstants{
      .l_pi_lip = std::sqrt(a) / (g1 * g1),
      .l_pi_smooth = 2.0 * gamma * a / (g1 * g1 * g1),
      .l_p_lip = std::sqrt(s * a) / (g1 * g1),
      .l_p_smooth = 2.0 * gamma * s / (g1 * g1 * g1),
  };
}

namespace ambient {

Matrix policy_transition(const Matrix& policy, const Matrix& kernel) {
  const Eigen::Index S = policy.rows();
  const Eigen::Index A = policy.cols();
  Matrix p_pi = Matrix::Zero(S, kernel.cols());
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index a = 0; a < A; ++a) {
      p_pi.row(s) += policy(s, a) * kernel.row(s * A + a);
    }
  }
  return p_pi;
}

Vector policy_cost(const Matrix& cost, const Matrix& policy,
                   const Matrix& kernel) {
  const Eigen::Index S = policy.rows();
  const Eigen::Index A = policy.cols();
  const Vector expected = kernel.cwiseProduct(cost).rowwise().sum();
  Vector c_pi = Vector::Zero(S);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index a = 0; a < A; ++a) {
      c_pi(s) += policy(s, a) * expected(s * A + a);
    }
  }
  return c_pi;
}

PolicyEvaluation evaluate(const TabularRmdp& mdp, const Matrix& policy,
                          const Matrix& kernel) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  if (policy.rows() != S || policy.cols() != A) {
    throw InvalidInput("evaluate: policy shape mismatch");
  }
  if (kernel.rows() != S * A || kernel.cols() != S) {
    throw InvalidInput("evaluate: kernel shape mismatch");
  }
  const double gamma = mdp.gamma();
  const Matrix system =
      Matrix::Identity(S, S) - gamma * policy_transition(policy, kernel);
  const Eigen::PartialPivLU<Matrix> lu(system);

  PolicyEvaluation out;
  out.value = lu.solve(policy_cost(mdp.cost(), policy, kernel));
  out.occupancy = (1.0 - gamma) * Eigen::PartialPivLU<Matrix>(system.transpose()).solve(mdp.initial_dist());
  const Vector q_flat = kernel.cwiseProduct(mdp.cost()).rowwise().sum() +
                        gamma * kernel * out.value;
  out.q = q_flat.reshaped<Eigen::RowMajor>(S, A);
  out.objective = mdp.initial_dist().dot(out.value);
  return out;
}

double objective_j(const TabularRmdp& mdp, const Matrix& policy,
                   const Matrix& kernel) {
  return evaluate(mdp, policy, kernel).objective;
}

}  // namespace ambient

void check_shapes(const TabularRmdp& mdp, const Policy& policy,
                  const TransitionKernel& kernel) {
  if (policy.num_states() != mdp.num_states() ||
      policy.num_actions() != mdp.num_actions()) {
    throw InvalidInput("policy shape does not match the mdp");
  }
  if (kernel.num_states() != mdp.num_states() ||
      kernel.num_actions() != mdp.num_actions()) {
    throw InvalidInput("kernel shape does not match the mdp");
  }
}

PolicyEvaluation evaluate_policy(const TabularRmdp& mdp, const Policy& policy,
                                 const TransitionKernel& kernel) {
  check_shapes(mdp, policy, kernel);
  return ambient::evaluate(mdp, policy.matrix(), kernel.matrix());
}

Vector value_function(const TabularRmdp& mdp, const Policy& policy,
                      const TransitionKernel& kernel) {
  return evaluate_policy(mdp, policy, kernel).value;
}

Matrix q_function(const TabularRmdp& mdp, const Policy& policy,
                  const TransitionKernel& kernel) {
  return evaluate_policy(mdp, policy, kernel).q;
}

Vector occupancy_measure(const TabularRmdp& mdp, const Policy& policy,
                         const TransitionKernel& kernel) {
  return evaluate_policy(mdp, policy, kernel).occupancy;
}

double objective_j(const TabularRmdp& mdp, const Policy& policy,
                   const TransitionKernel& kernel) {
  return evaluate_policy(mdp, policy, kernel).objective;
}

}  // namespace rmdp
