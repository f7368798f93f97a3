#include "rmdp/gradients.hpp"

namespace rmdp {

namespace ambient {

JointGradient gradients(const TabularRmdp& mdp, const Matrix& policy,
                        const Matrix& kernel) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const double scale = 1.0 / (1.0 - mdp.gamma());

  JointGradient out{evaluate(mdp, policy, kernel), Matrix(S, A),
                    Matrix(S * A, S)};
  const Vector& d = out.eval.occupancy;
  out.pi = scale * (d.asDiagonal() * out.eval.q);

  const Eigen::RowVectorXd continuation =
      mdp.gamma() * out.eval.value.transpose();
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const int r = s * A + a;
      const double weight = scale * d(s) * policy(s, a);
      out.p.row(r) = weight * (mdp.cost().row(r) + continuation);
    }
  }
  return out;
}

}  // namespace ambient

Matrix grad_pi(const TabularRmdp& mdp, const Policy& policy,
               const TransitionKernel& kernel) {
  check_shapes(mdp, policy, kernel);
  return ambient::gradients(mdp, policy.matrix(), kernel.matrix()).pi;
}

Matrix grad_p(const TabularRmdp& mdp, const Policy& policy,
              const TransitionKernel& kernel) {
  check_shapes(mdp, policy, kernel);
  return ambient::gradients(mdp, policy.matrix(), kernel.matrix()).p;
}

Vector finite_diff_grad(const ScalarField& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw InvalidInput("finite_diff_grad: step must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace rmdp
