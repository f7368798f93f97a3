#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>

#include "rmdp/geometry.hpp"
#include "rmdp/tabular.hpp"

namespace rmdp {

class InventoryModel;

enum class SetKind { kSingleton, kSRect, kSaRect, kParamXi };

std::string to_string(SetKind kind);
SetKind set_kind_from_string(const std::string& name);

// Ambiguity set around a nominal kernel. The three tabular variants are
// convex and s-rectangular; the parameterized variant lives in (theta, lambda)
// space and is handled by the inventory module.
class AmbiguitySet {
 public:
  struct Singleton {};
  // One radius per (s, a), indexed s*A + a.
  struct SaRectL1 {
    Vector kappa;
  };
  // One radius per state.
  struct SRectL1 {
    Vector kappa;
  };
  struct ParamXi {
    std::shared_ptr<const InventoryModel> model;
  };
  using Variant = std::variant<Singleton, SaRectL1, SRectL1, ParamXi>;

  static AmbiguitySet singleton(TransitionKernel nominal);
  static AmbiguitySet sa_rect(TransitionKernel nominal, Vector kappa);
  static AmbiguitySet s_rect(TransitionKernel nominal, Vector kappa);
  static AmbiguitySet param_xi(std::shared_ptr<const InventoryModel> model);

  SetKind kind() const;
  const TransitionKernel& nominal() const { return nominal_; }
  const Variant& variant() const { return variant_; }
  bool is_tabular() const { return kind() != SetKind::kParamXi; }

  // Euclidean projection of an ambient kernel-shaped matrix onto the set.
  // Only defined for the tabular variants.
  Matrix project(const Matrix& y, const DykstraOptions& opts = {}) const;
  TransitionKernel project_kernel(const Matrix& y,
                                  const DykstraOptions& opts = {}) const;

  // Simplex and L1 constraints within tol. Tabular variants only.
  bool contains(const TransitionKernel& kernel, double tol) const;

 private:
  AmbiguitySet(TransitionKernel nominal, Variant variant);

  TransitionKernel nominal_;
  Variant variant_;
};

struct PgmConfig {
  double step = 0.1;
  int max_iters = 200;
  double rel_tol = 1e-4;
  // Stop on the change in J alone. By default the iterate must also have
  // settled (relative change below rel_tol), since J can stall for one step
  // while the kernel is still moving between faces of the set.
  bool value_only_stop = false;
  // Extra runs from random feasible starts for robust_value (diagnostic).
  int random_restarts = 0;
  std::uint64_t seed = 0;
};

void validate(const PgmConfig& cfg);

struct PgmResult {
  TransitionKernel kernel;
  double value;
  int iterations;
};

// Projected gradient ascent p <- Proj(p + step * grad_p J(pi, p)) from
// `start`, stopping when |dJ| / max(1, |J|) < rel_tol or after max_iters.
// Returns the best visited iterate.
PgmResult pgm_maximize(const TabularRmdp& mdp, const Policy& policy,
                       const AmbiguitySet& set, const TransitionKernel& start,
                       const PgmConfig& cfg);

// Worst-case return phi(pi) estimated by PGM from the nominal kernel.
double robust_value(const TabularRmdp& mdp, const Policy& policy,
                    const AmbiguitySet& set, const PgmConfig& cfg);

// Maximizes <g, x> over the set by projected ascent on the linear objective.
Matrix linear_maximize(const AmbiguitySet& set, const Matrix& direction,
                       const Matrix& start);

struct GradientDominance {
  double lhs;
  double rhs;
  bool holds;
  bool infinite_mismatch;  // rho vanishes on a visited state
};

// Evaluates both sides of
//   phi(pi) - J(pi, p) <= D/(1-gamma) * max_{q in P} <q - p, grad_p J(pi, p)>
// with D = max_s d^{pi,p*}(s) / rho(s) at the PGM worst-case kernel p*.
GradientDominance gradient_dominance_check(const TabularRmdp& mdp,
                                           const Policy& policy,
                                           const TransitionKernel& kernel,
                                           const AmbiguitySet& set,
                                           const PgmConfig& cfg);

}  // namespace rmdp
