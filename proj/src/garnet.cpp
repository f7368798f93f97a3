#include "rmdp/garnet.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "rmdp/geometry.hpp"
#include "rmdp/rng.hpp"

namespace rmdp {

TabularRmdp generate_garnet(const GarnetParams& params, std::uint64_t seed) {
  const int S = params.num_states;
  const int A = params.num_actions;
  const int b = params.branching;
  if (S <= 0 || A <= 0) throw InvalidInput("garnet: S and A must be positive");
  if (b < 1 || b > S) throw InvalidInput("garnet: branching must lie in [1, S]");
  if (!(params.cost_hi >= params.cost_lo)) throw InvalidInput("garnet: bad cost range");

  Rng rng(seed);
  Matrix kernel = Matrix::Zero(S * A, S);
  std::vector<int> states(S);
  std::vector<double> cuts(b + 1);
  for (int r = 0; r < S * A; ++r) {
    // Partial Fisher-Yates picks b distinct successors.
    std::iota(states.begin(), states.end(), 0);
    for (int i = 0; i < b; ++i) {
      const int j = i + static_cast<int>(rng.uniform_int(S - i));
      std::swap(states[i], states[j]);
    }
    cuts.front() = 0.0;
    cuts.back() = 1.0;
    for (int i = 1; i < b; ++i) cuts[i] = rng.uniform();
    std::sort(cuts.begin() + 1, cuts.end() - 1);
    for (int i = 0; i < b; ++i) kernel(r, states[i]) = cuts[i + 1] - cuts[i];
    // Coinciding cut points would shrink the support below b.
    for (int i = 0; i < b; ++i) {
      if (kernel(r, states[i]) <= 0.0) kernel(r, states[i]) = 1e-300;
    }
    kernel.row(r) /= kernel.row(r).sum();
  }

  Matrix cost(S * A, S);
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
      cost(i, j) = rng.uniform(params.cost_lo, params.cost_hi);
    }
  }

  Vector rho(S);
  for (int s = 0; s < S; ++s) rho(s) = rng.uniform(0.0, 5.0);
  rho = project_simplex(rho);

  return TabularRmdp(S, A, std::move(cost), params.gamma, std::move(rho),
                     TransitionKernel(A, std::move(kernel)));
}

Vector sample_kappa(SetKind kind, int num_states, int num_actions, double lo,
                    double hi, std::uint64_t seed) {
  if (!(hi >= lo) || lo < 0.0) throw InvalidInput("sample_kappa: bad range");
  int count = 0;
  switch (kind) {
    case SetKind::kSRect: count = num_states; break;
    case SetKind::kSaRect: count = num_states * num_actions; break;
    default: throw InvalidInput("sample_kappa: only s_rect and sa_rect have radii");
  }
  Rng rng(seed);
  Vector kappa(count);
  for (int i = 0; i < count; ++i) kappa(i) = rng.uniform(lo, hi);
  return kappa;
}

AmbiguitySet make_garnet_set(const TabularRmdp& mdp, SetKind kind,
                             const Vector& kappa) {
  switch (kind) {
    case SetKind::kSingleton: return AmbiguitySet::singleton(mdp.nominal());
    case SetKind::kSRect: return AmbiguitySet::s_rect(mdp.nominal(), kappa);
    case SetKind::kSaRect: return AmbiguitySet::sa_rect(mdp.nominal(), kappa);
    case SetKind::kParamXi: break;
  }
  throw InvalidInput("make_garnet_set: param_xi sets come from the inventory model");
}

}  // namespace rmdp
