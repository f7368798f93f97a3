#pragma once

#include <cstdint>

#include "rmdp/ambiguity.hpp"
#include "rmdp/tabular.hpp"

namespace rmdp {

struct GarnetParams {
  int num_states = 5;
  int num_actions = 6;
  int branching = 3;
  double cost_lo = 0.0;
  double cost_hi = 5.0;
  double gamma = 0.95;
};

// GARNET(S, A, b): each (s, a) reaches b distinct successors drawn without
// replacement, with probabilities from b - 1 sorted uniform cut points.
// Costs are i.i.d. uniform on [cost_lo, cost_hi]; rho is a vector of
// U[0, 5] draws projected onto the simplex.
TabularRmdp generate_garnet(const GarnetParams& params, std::uint64_t seed);

// I.i.d. uniform radii: S of them for s_rect, S*A (indexed s*A + a) for
// sa_rect.
Vector sample_kappa(SetKind kind, int num_states, int num_actions, double lo,
                    double hi, std::uint64_t seed);

// Builds the tabular set of the given kind around the mdp's nominal kernel.
AmbiguitySet make_garnet_set(const TabularRmdp& mdp, SetKind kind,
                             const Vector& kappa);

}  // namespace rmdp
