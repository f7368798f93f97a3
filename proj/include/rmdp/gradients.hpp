#pragma once

#include <functional>

#include "rmdp/tabular.hpp"

namespace rmdp {

// dJ/dpi_{sa} = d[s] q[s][a] / (1 - gamma), S x A.
Matrix grad_pi(const TabularRmdp& mdp, const Policy& policy,
               const TransitionKernel& kernel);

// Ambient derivative of J in the kernel coordinates, laid out like the kernel:
// dJ/dp_{sas'} = d[s] pi[s][a] (c_{sas'} + gamma v[s']) / (1 - gamma).
Matrix grad_p(const TabularRmdp& mdp, const Policy& policy,
              const TransitionKernel& kernel);

// Both gradients from one evaluation.
struct JointGradient {
  PolicyEvaluation eval;
  Matrix pi;
  Matrix p;
};

namespace ambient {

JointGradient gradients(const TabularRmdp& mdp, const Matrix& policy,
                        const Matrix& kernel);

}  // namespace ambient

using ScalarField = std::function<double(const Vector&)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
// The default step suits O(1) inputs; tune h for badly scaled functions.
Vector finite_diff_grad(const ScalarField& f, const Vector& x, double h = 1e-6);

}  // namespace rmdp
