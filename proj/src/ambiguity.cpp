#include "rmdp/ambiguity.hpp"

#include <cmath>
#include <limits>

#include "rmdp/gradients.hpp"
#include "rmdp/inventory.hpp"
#include "rmdp/rng.hpp"

namespace rmdp {

std::string to_string(SetKind kind) {
  switch (kind) {
    case SetKind::kSingleton: return "singleton";
    case SetKind::kSRect: return "s_rect";
    case SetKind::kSaRect: return "sa_rect";
    case SetKind::kParamXi: return "param_xi";
  }
  return "unknown";
}

SetKind set_kind_from_string(const std::string& name) {
  if (name == "singleton") return SetKind::kSingleton;
  if (name == "s_rect") return SetKind::kSRect;
  if (name == "sa_rect") return SetKind::kSaRect;
  if (name == "param_xi") return SetKind::kParamXi;
  throw InvalidInput("unknown ambiguity set kind '" + name + "'");
}

AmbiguitySet::AmbiguitySet(TransitionKernel nominal, Variant variant)
    : nominal_(std::move(nominal)), variant_(std::move(variant)) {}

AmbiguitySet AmbiguitySet::singleton(TransitionKernel nominal) {
  return AmbiguitySet(std::move(nominal), Singleton{});
}

AmbiguitySet AmbiguitySet::sa_rect(TransitionKernel nominal, Vector kappa) {
  if (kappa.size() != nominal.matrix().rows()) {
    throw InvalidInput("sa_rect: need one radius per state-action pair");
  }
  if (!kappa.allFinite() || kappa.minCoeff() < 0.0) {
    throw InvalidInput("sa_rect: radii must be finite and nonnegative");
  }
  return AmbiguitySet(std::move(nominal), SaRectL1{std::move(kappa)});
}

AmbiguitySet AmbiguitySet::s_rect(TransitionKernel nominal, Vector kappa) {
  if (kappa.size() != nominal.num_states()) {
    throw InvalidInput("s_rect: need one radius per state");
  }
  if (!kappa.allFinite() || kappa.minCoeff() < 0.0) {
    throw InvalidInput("s_rect: radii must be finite and nonnegative");
  }
  return AmbiguitySet(std::move(nominal), SRectL1{std::move(kappa)});
}

AmbiguitySet AmbiguitySet::param_xi(std::shared_ptr<const InventoryModel> model) {
  if (!model) throw InvalidInput("param_xi: null model");
  TransitionKernel nominal = model->mdp().nominal();
  return AmbiguitySet(std::move(nominal), ParamXi{std::move(model)});
}

SetKind AmbiguitySet::kind() const {
  switch (variant_.index()) {
    case 0: return SetKind::kSingleton;
    case 1: return SetKind::kSaRect;
    case 2: return SetKind::kSRect;
    default: return SetKind::kParamXi;
  }
}

Matrix AmbiguitySet::project(const Matrix& y, const DykstraOptions& opts) const {
  const Matrix& center = nominal_.matrix();
  if (y.rows() != center.rows() || y.cols() != center.cols()) {
    throw InvalidInput("ambiguity projection: shape mismatch");
  }
  switch (kind()) {
    case SetKind::kSingleton:
      return center;
    case SetKind::kSaRect:
      return project_sa_rect(y, center, std::get<SaRectL1>(variant_).kappa, opts);
    case SetKind::kSRect:
      return project_s_rect(y, center, std::get<SRectL1>(variant_).kappa,
                            nominal_.num_actions(), opts);
    case SetKind::kParamXi:
      break;
  }
  throw std::logic_error(
      "param_xi sets are projected in (theta, lambda) space, not kernel space");
}

TransitionKernel AmbiguitySet::project_kernel(const Matrix& y,
                                              const DykstraOptions& opts) const {
  return TransitionKernel(nominal_.num_actions(), project(y, opts));
}

bool AmbiguitySet::contains(const TransitionKernel& kernel, double tol) const {
  const Matrix& center = nominal_.matrix();
  const Matrix& p = kernel.matrix();
  if (p.rows() != center.rows() || p.cols() != center.cols()) {
    throw InvalidInput("contains: shape mismatch");
  }
  if (p.minCoeff() < -tol) return false;
  if (((p.rowwise().sum().array() - 1.0).abs() > tol).any()) return false;

  const Vector row_l1 = (p - center).cwiseAbs().rowwise().sum();
  switch (kind()) {
    case SetKind::kSingleton:
      return (p - center).cwiseAbs().maxCoeff() <= tol;
    case SetKind::kSaRect: {
      const Vector& kappa = std::get<SaRectL1>(variant_).kappa;
      return ((row_l1 - kappa).array() <= tol).all();
    }
    case SetKind::kSRect: {
      const Vector& kappa = std::get<SRectL1>(variant_).kappa;
      const int A = nominal_.num_actions();
      for (int s = 0; s < kernel.num_states(); ++s) {
        if (row_l1.segment(s * A, A).sum() > kappa(s) + tol) return false;
      }
      return true;
    }
    case SetKind::kParamXi:
      break;
  }
  throw std::logic_error("contains is not defined for param_xi sets");
}

void validate(const PgmConfig& cfg) {
  if (!(cfg.step > 0.0)) throw InvalidInput("pgm: step must be positive");
  if (cfg.max_iters <= 0) throw InvalidInput("pgm: max_iters must be positive");
  if (!(cfg.rel_tol > 0.0)) throw InvalidInput("pgm: rel_tol must be positive");
  if (cfg.random_restarts < 0) throw InvalidInput("pgm: negative restarts");
}

PgmResult pgm_maximize(const TabularRmdp& mdp, const Policy& policy,
                       const AmbiguitySet& set, const TransitionKernel& start,
                       const PgmConfig& cfg) {
  validate(cfg);
  if (!set.is_tabular()) {
    throw std::logic_error(
        "pgm_maximize works in kernel space; use inventory::pgm_maximize_xi");
  }
  check_shapes(mdp, policy, start);

  Matrix p = set.contains(start, 1e-9) ? start.matrix() : set.project(start.matrix());
  double value = ambient::objective_j(mdp, policy.matrix(), p);
  Matrix best = p;
  double best_value = value;

  int iterations = 0;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    const JointGradient g = ambient::gradients(mdp, policy.matrix(), p);
    Matrix stepped = set.project(p + cfg.step * g.p);
    const double moved = (stepped - p).norm() / std::max(1.0, p.norm());
    p = std::move(stepped);
    const double next = ambient::objective_j(mdp, policy.matrix(), p);
    iterations = t;
    if (next > best_value) {
      best_value = next;
      best = p;
    }
    const double rel = std::abs(next - value) / std::max(1.0, std::abs(value));
    value = next;
    if (rel < cfg.rel_tol && (cfg.value_only_stop || moved < cfg.rel_tol)) break;
  }
  return PgmResult{TransitionKernel(mdp.num_actions(), std::move(best)),
                   best_value, iterations};
}

double robust_value(const TabularRmdp& mdp, const Policy& policy,
                    const AmbiguitySet& set, const PgmConfig& cfg) {
  if (set.kind() == SetKind::kParamXi) {
    const auto& model = std::get<AmbiguitySet::ParamXi>(set.variant()).model;
    return robust_value_xi(*model, policy, cfg);
  }
  double best = pgm_maximize(mdp, policy, set, set.nominal(), cfg).value;
  if (cfg.random_restarts > 0 && set.kind() != SetKind::kSingleton) {
    Rng rng(cfg.seed);
    const Matrix& center = set.nominal().matrix();
    for (int r = 0; r < cfg.random_restarts; ++r) {
      Matrix raw(center.rows(), center.cols());
      for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = rng.uniform();
      const TransitionKernel start = set.project_kernel(center + raw);
      best = std::max(best, pgm_maximize(mdp, policy, set, start, cfg).value);
    }
  }
  return best;
}

Matrix linear_maximize(const AmbiguitySet& set, const Matrix& direction,
                       const Matrix& start) {
  const double scale = direction.cwiseAbs().maxCoeff();
  Matrix x = set.project(start);
  if (scale == 0.0) return x;
  // A bounded step keeps every projection input close to the set.
  const Matrix step = (0.5 / scale) * direction;
  for (int t = 0; t < 5000; ++t) {
    Matrix next = set.project(x + step);
    const double moved = (next - x).norm();
    x = std::move(next);
    if (moved < 1e-11) break;
  }
  return x;
}

GradientDominance gradient_dominance_check(const TabularRmdp& mdp,
                                           const Policy& policy,
                                           const TransitionKernel& kernel,
                                           const AmbiguitySet& set,
                                           const PgmConfig& cfg) {
  if (!set.is_tabular()) {
    throw std::logic_error("gradient_dominance_check needs a tabular set");
  }
  check_shapes(mdp, policy, kernel);

  // Best of the evaluation protocol (start at nominal) and a run from p.
  PgmResult worst = pgm_maximize(mdp, policy, set, set.nominal(), cfg);
  PgmResult local = pgm_maximize(mdp, policy, set, kernel, cfg);
  if (local.value > worst.value) worst = std::move(local);

  const JointGradient at_p =
      ambient::gradients(mdp, policy.matrix(), kernel.matrix());
  const double lhs = worst.value - at_p.eval.objective;

  const Vector d_star = evaluate_policy(mdp, policy, worst.kernel).occupancy;
  const Vector& rho = mdp.initial_dist();
  double mismatch = 0.0;
  for (Eigen::Index s = 0; s < rho.size(); ++s) {
    if (rho(s) > 0.0) {
      mismatch = std::max(mismatch, d_star(s) / rho(s));
    } else if (d_star(s) > 1e-15) {
      return GradientDominance{lhs, std::numeric_limits<double>::infinity(),
                               true, true};
    }
  }

  const Matrix best_direction = linear_maximize(set, at_p.p, kernel.matrix());
  const double linear_gain =
      ((best_direction - kernel.matrix()).array() * at_p.p.array()).sum();
  const double rhs = mismatch / (1.0 - mdp.gamma()) * linear_gain;
  return GradientDominance{lhs, rhs, lhs <= rhs + 1e-6, false};
}

}  // namespace rmdp
