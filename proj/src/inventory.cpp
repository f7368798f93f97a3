#include "rmdp/inventory.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "rmdp/geometry.hpp"
#include "rmdp/gradients.hpp"
#include "rmdp/garnet.hpp"
#include "rmdp/rng.hpp"

namespace rmdp {

InventorySpec InventorySpec::defaults() {
  InventorySpec spec;
  spec.states = {{0.25, 1.3}, {0.5, -2.1}, {0.75, 3.4}, {1.0, -1.0},
                 {0.25, 2.5}, {0.5, 0.5},  {0.75, 1.8}, {1.0, -0.8}};
  spec.actions = {-3.0, -1.0, 5.0};
  spec.branching = 5;
  spec.gamma = 0.95;
  spec.theta_center = Vector{{0.4, 0.9}};
  spec.lambda_center = Vector{{0.7, 0.6}};
  spec.kappa_theta = 1.0;
  spec.kappa_lambda = 1.0;
  spec.theta_feature_centers = {{-1.0, 2.0}, {0.3, -0.6}};
  spec.lambda_state_centers = {{1.3, 2.1}, {-0.7, 1.5}};
  spec.lambda_action_centers = {1.0, 0.5};
  spec.sigma_theta = 1.0;
  spec.sigma_lambda = 2.0;
  return spec;
}

void InventorySpec::validate() const {
  if (states.empty() || actions.empty()) {
    throw InvalidInput("inventory: need at least one state and one action");
  }
  if (branching < 1 || branching > num_states()) {
    throw InvalidInput("inventory: branching must lie in [1, S]");
  }
  if (theta_center.size() != theta_dim() || theta_dim() == 0) {
    throw InvalidInput("inventory: theta center must match the theta features");
  }
  if (lambda_center.size() != lambda_dim() || lambda_dim() == 0 ||
      static_cast<int>(lambda_action_centers.size()) != lambda_dim()) {
    throw InvalidInput("inventory: lambda center must match the lambda features");
  }
  if (lambda_center.minCoeff() <= 0.0) {
    throw InvalidInput("inventory: lambda center must be positive");
  }
  if (kappa_theta < 0.0 || kappa_lambda < 0.0) {
    throw InvalidInput("inventory: radii must be nonnegative");
  }
  if (!(sigma_theta > 0.0 && sigma_lambda > 0.0)) {
    throw InvalidInput("inventory: feature widths must be positive");
  }
}

Vector feature_theta(const InventorySpec& spec, int next_state) {
  const Eigen::Vector2d& s = spec.states.at(next_state);
  const double peak = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * spec.sigma_theta);
  const double denom = 2.0 * spec.sigma_theta * spec.sigma_theta;
  Vector out(spec.theta_dim());
  for (int i = 0; i < spec.theta_dim(); ++i) {
    out(i) = peak * std::exp(-(s - spec.theta_feature_centers[i]).squaredNorm() / denom);
  }
  return out;
}

Vector feature_lambda(const InventorySpec& spec, int state, int action) {
  const Eigen::Vector2d& s = spec.states.at(state);
  const double a = spec.actions.at(action);
  const double peak = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * spec.sigma_lambda);
  const double denom = 2.0 * spec.sigma_lambda * spec.sigma_lambda;
  Vector out(spec.lambda_dim());
  for (int i = 0; i < spec.lambda_dim(); ++i) {
    const double da = a - spec.lambda_action_centers[i];
    const double dist2 = (s - spec.lambda_state_centers[i]).squaredNorm() + da * da;
    out(i) = peak * std::exp(-dist2 / denom);
  }
  return out;
}

Vector XiParams::flat() const {
  Vector out(theta.size() + lambda.size());
  out << theta, lambda;
  return out;
}

XiParams XiParams::from_flat(const Vector& flat, int theta_dim) {
  return XiParams{flat.head(theta_dim), flat.tail(flat.size() - theta_dim)};
}

InventoryModel::InventoryModel(InventorySpec spec, TabularRmdp mdp)
    : spec_(std::move(spec)), mdp_(std::move(mdp)) {
  spec_.validate();
  const int S = spec_.num_states();
  const int A = spec_.num_actions();
  if (mdp_.num_states() != S || mdp_.num_actions() != A) {
    throw InvalidInput("inventory: mdp shape does not match the spec");
  }
  theta_features_.resize(S, spec_.theta_dim());
  for (int s = 0; s < S; ++s) theta_features_.row(s) = feature_theta(spec_, s).transpose();
  lambda_features_.resize(S * A, spec_.lambda_dim());
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      lambda_features_.row(s * A + a) = feature_lambda(spec_, s, a).transpose();
    }
  }
}

InventoryModel InventoryModel::generate(const InventorySpec& spec,
                                        std::uint64_t seed) {
  spec.validate();
  GarnetParams params;
  params.num_states = spec.num_states();
  params.num_actions = spec.num_actions();
  params.branching = spec.branching;
  params.cost_lo = spec.cost_lo;
  params.cost_hi = spec.cost_hi;
  params.gamma = spec.gamma;
  const TabularRmdp garnet = generate_garnet(params, seed);
  const int S = spec.num_states();
  TabularRmdp mdp(S, spec.num_actions(), garnet.cost(), spec.gamma,
                  Vector::Constant(S, 1.0 / S), garnet.nominal());
  return InventoryModel(spec, std::move(mdp));
}

Vector InventoryModel::temperatures(const XiParams& xi) const {
  if (xi.theta.size() != spec_.theta_dim() || xi.lambda.size() != spec_.lambda_dim()) {
    throw InvalidInput("inventory: xi has the wrong dimensions");
  }
  return lambda_features_ * xi.lambda;
}

namespace {

// Tilted kernel as a raw matrix together with the temperatures used.
struct TiltedKernel {
  Matrix rows;
  Vector temperatures;
  Vector state_scores;  // theta^T phi_theta(s') for every s'
};

TiltedKernel tilt(const InventoryModel& model, const XiParams& xi) {
  const Vector temps = model.temperatures(xi);
  if (temps.minCoeff() <= 0.0) {
    throw InvalidInput("inventory: nonpositive kernel temperature lambda^T phi_lambda");
  }
  const Matrix& nominal = model.mdp().nominal().matrix();
  const Vector scores = model.theta_features() * xi.theta;
  Matrix rows = Matrix::Zero(nominal.rows(), nominal.cols());
  for (Eigen::Index r = 0; r < nominal.rows(); ++r) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < nominal.cols(); ++j) {
      if (nominal(r, j) > 0.0) top = std::max(top, scores(j) / temps(r));
    }
    for (Eigen::Index j = 0; j < nominal.cols(); ++j) {
      if (nominal(r, j) > 0.0) {
        rows(r, j) = nominal(r, j) * std::exp(scores(j) / temps(r) - top);
      }
    }
    rows.row(r) /= rows.row(r).sum();
  }
  return {std::move(rows), temps, scores};
}

// Gradient of J through the tilted kernel, given the evaluation at p^xi.
XiGradient chain_through_kernel(const InventoryModel& model, const Matrix& policy,
                                const TiltedKernel& k, const PolicyEvaluation& eval) {
  const TabularRmdp& mdp = model.mdp();
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const Matrix& features = model.theta_features();
  const double gamma = mdp.gamma();
  XiGradient g{Vector::Zero(features.cols()),
               Vector::Zero(model.lambda_features().cols())};
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const int r = s * A + a;
      const double weight = eval.occupancy(s) * policy(s, a) / (1.0 - gamma);
      if (weight == 0.0) continue;
      const Eigen::RowVectorXd p = k.rows.row(r);
      const double temp = k.temperatures(r);
      const Eigen::RowVectorXd mean_feature = p * features;
      const double mean_score = p.dot(k.state_scores);
      Vector d_theta = Vector::Zero(features.cols());
      double d_temp = 0.0;
      for (int next = 0; next < S; ++next) {
        if (p(next) == 0.0) continue;
        const double target =
            p(next) * (mdp.cost(s, a, next) + gamma * eval.value(next));
        d_theta += target * (features.row(next) - mean_feature).transpose() / temp;
        d_temp += target * (mean_score - k.state_scores(next)) / (temp * temp);
      }
      g.theta += weight * d_theta;
      g.lambda += weight * d_temp * model.lambda_features().row(r).transpose();
    }
  }
  return g;
}

Matrix softmax_policy(const InventoryModel& model, const Vector& w) {
  const int S = model.mdp().num_states();
  const int A = model.mdp().num_actions();
  if (w.size() != model.lambda_features().cols()) {
    throw InvalidInput("inventory: w has the wrong dimension");
  }
  if (!w.allFinite()) throw InvalidInput("inventory: non-finite w");
  const Vector logits = model.lambda_features() * w;
  Matrix pi(S, A);
  for (int s = 0; s < S; ++s) {
    const double top = logits.segment(s * A, A).maxCoeff();
    for (int a = 0; a < A; ++a) pi(s, a) = std::exp(logits(s * A + a) - top);
    pi.row(s) /= pi.row(s).sum();
  }
  return pi;
}

}  // namespace

TransitionKernel kernel_from_xi(const InventoryModel& model, const XiParams& xi) {
  return TransitionKernel(model.mdp().num_actions(), tilt(model, xi).rows);
}

XiGradient grad_log_kernel(const InventoryModel& model, const XiParams& xi,
                           int state, int action, int next_state) {
  const TabularRmdp& mdp = model.mdp();
  const int A = mdp.num_actions();
  const int r = state * A + action;
  if (mdp.nominal()(state, action, next_state) <= 0.0) {
    throw InvalidInput("grad_log_kernel: successor is unreachable under the nominal kernel");
  }
  const TiltedKernel k = tilt(model, xi);
  const Eigen::RowVectorXd p = k.rows.row(r);
  const double temp = k.temperatures(r);
  const Matrix& features = model.theta_features();
  XiGradient g;
  g.theta = (features.row(next_state) - p * features).transpose() / temp;
  const double mean_score = p.dot(k.state_scores);
  g.lambda = (mean_score / (temp * temp) - k.state_scores(next_state) / (temp * temp)) *
             model.lambda_features().row(r).transpose();
  return g;
}

XiGradient grad_j_xi(const InventoryModel& model, const Policy& policy,
                     const XiParams& xi) {
  const TiltedKernel k = tilt(model, xi);
  check_shapes(model.mdp(), policy, model.mdp().nominal());
  const PolicyEvaluation eval = ambient::evaluate(model.mdp(), policy.matrix(), k.rows);
  return chain_through_kernel(model, policy.matrix(), k, eval);
}

Policy policy_from_w(const InventoryModel& model, const Vector& w) {
  return Policy(softmax_policy(model, w));
}

Vector grad_j_w(const InventoryModel& model, const Vector& w, const XiParams& xi) {
  const Matrix pi = softmax_policy(model, w);
  const TiltedKernel k = tilt(model, xi);
  const Matrix g_pi = ambient::gradients(model.mdp(), pi, k.rows).pi;
  const Matrix& phi = model.lambda_features();
  const int S = model.mdp().num_states();
  const int A = model.mdp().num_actions();
  Vector g = Vector::Zero(w.size());
  for (int s = 0; s < S; ++s) {
    const Eigen::RowVectorXd mean = pi.row(s) * phi.middleRows(s * A, A);
    for (int a = 0; a < A; ++a) {
      g += g_pi(s, a) * pi(s, a) * (phi.row(s * A + a) - mean).transpose();
    }
  }
  return g;
}

XiParams project_xi(const InventorySpec& spec, const XiParams& raw) {
  if (raw.theta.size() != spec.theta_dim() || raw.lambda.size() != spec.lambda_dim()) {
    throw InvalidInput("project_xi: dimension mismatch");
  }
  const Vector lower = Vector::Constant(spec.lambda_dim(), kLambdaMin);
  return XiParams{
      project_l1_ball(raw.theta, spec.theta_center, spec.kappa_theta),
      project_box_l1(raw.lambda, spec.lambda_center, spec.kappa_lambda, lower)};
}

bool xi_feasible(const InventorySpec& spec, const XiParams& xi, double tol) {
  return (xi.theta - spec.theta_center).lpNorm<1>() <= spec.kappa_theta + tol &&
         (xi.lambda - spec.lambda_center).lpNorm<1>() <= spec.kappa_lambda + tol &&
         xi.lambda.minCoeff() >= kLambdaMin - tol;
}

XiPgmResult pgm_maximize_xi(const InventoryModel& model, const Policy& policy,
                            const XiParams& start, const PgmConfig& cfg) {
  validate(cfg);
  const InventorySpec& spec = model.spec();
  XiParams xi = xi_feasible(spec, start, 1e-12) ? start : project_xi(spec, start);
  double value = objective_j(model.mdp(), policy, kernel_from_xi(model, xi));
  XiParams best = xi;
  double best_value = value;
  int iterations = 0;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    const XiGradient g = grad_j_xi(model, policy, xi);
    XiParams stepped = project_xi(spec, XiParams{xi.theta + cfg.step * g.theta,
                                                 xi.lambda + cfg.step * g.lambda});
    const double moved =
        (stepped.flat() - xi.flat()).norm() / std::max(1.0, xi.flat().norm());
    xi = std::move(stepped);
    const double next = objective_j(model.mdp(), policy, kernel_from_xi(model, xi));
    iterations = t;
    if (next > best_value) {
      best_value = next;
      best = xi;
    }
    const double rel = std::abs(next - value) / std::max(1.0, std::abs(value));
    value = next;
    if (rel < cfg.rel_tol && (cfg.value_only_stop || moved < cfg.rel_tol)) break;
  }
  return XiPgmResult{std::move(best), best_value, iterations};
}

double robust_value_xi(const InventoryModel& model, const Policy& policy,
                       const PgmConfig& cfg) {
  double best = pgm_maximize_xi(model, policy, model.center(), cfg).value;
  if (cfg.random_restarts > 0) {
    Rng rng(cfg.seed);
    const InventorySpec& spec = model.spec();
    for (int r = 0; r < cfg.random_restarts; ++r) {
      XiParams start = model.center();
      for (Eigen::Index i = 0; i < start.theta.size(); ++i) {
        start.theta(i) += rng.uniform(-spec.kappa_theta, spec.kappa_theta);
      }
      for (Eigen::Index i = 0; i < start.lambda.size(); ++i) {
        start.lambda(i) += rng.uniform(-spec.kappa_lambda, spec.kappa_lambda);
      }
      best = std::max(best, pgm_maximize_xi(model, policy, start, cfg).value);
    }
  }
  return best;
}

std::string to_string(PolicyParam param) {
  return param == PolicyParam::kTabular ? "tabular" : "softmax";
}

PolicyParam policy_param_from_string(const std::string& name) {
  if (name == "tabular") return PolicyParam::kTabular;
  if (name == "softmax") return PolicyParam::kSoftmax;
  throw InvalidInput("unknown policy parameterization '" + name + "'");
}

int PolicyCoordinates::dim() const {
  const TabularRmdp& mdp = model_->mdp();
  return param_ == PolicyParam::kTabular
             ? mdp.num_states() * mdp.num_actions()
             : static_cast<int>(model_->lambda_features().cols());
}

Policy PolicyCoordinates::to_policy(const Vector& x) const {
  if (param_ == PolicyParam::kSoftmax) return policy_from_w(*model_, x);
  const int S = model_->mdp().num_states();
  const int A = model_->mdp().num_actions();
  if (x.size() != S * A) throw InvalidInput("policy coordinates: wrong dimension");
  return Policy(x.reshaped(A, S).transpose());
}

Vector PolicyCoordinates::from_policy(const Policy& policy) const {
  if (param_ != PolicyParam::kTabular) {
    throw std::logic_error("softmax coordinates cannot be recovered from a policy");
  }
  return policy.matrix().transpose().reshaped();
}

Vector PolicyCoordinates::project(const Vector& x) const {
  if (param_ == PolicyParam::kSoftmax) return x;
  const int S = model_->mdp().num_states();
  const int A = model_->mdp().num_actions();
  const Matrix rows = project_policy_rows(x.reshaped(A, S).transpose());
  return rows.transpose().reshaped();
}

Vector PolicyCoordinates::gradient(const Vector& x, const XiParams& xi) const {
  if (param_ == PolicyParam::kSoftmax) return grad_j_w(*model_, x, xi);
  const Policy pi = to_policy(x);
  const Matrix g = grad_pi(model_->mdp(), pi, kernel_from_xi(*model_, xi));
  return g.transpose().reshaped();
}

namespace {

struct XiResiduals {
  double pi;
  double p;
};

XiResiduals xi_residuals(const InventoryModel& model, const PolicyCoordinates& coords,
                         const Vector& x, const XiParams& xi, double eta) {
  const Vector gx = coords.gradient(x, xi);
  const XiGradient gxi = grad_j_xi(model, coords.to_policy(x), xi);
  const double res_pi = (x - coords.project(x - eta * gx)).norm() / eta;
  const XiParams ascended = project_xi(
      model.spec(), XiParams{xi.theta + eta * gxi.theta, xi.lambda + eta * gxi.lambda});
  const double res_p = (xi.flat() - ascended.flat()).norm() / eta;
  return {res_pi, res_p};
}

}  // namespace

XiRunResult srpg_run_xi(const InventoryModel& model, PolicyParam param,
                        const Vector& x0, const XiParams& xi0,
                        const SrpgConfig& cfg, const EvalOptions& eval) {
  validate(cfg);
  validate(eval.pgm);
  if (eval.eval_every <= 0) throw InvalidInput("srpg: eval_every must be positive");
  const PolicyCoordinates coords(model, param);
  if (x0.size() != coords.dim()) throw InvalidInput("srpg: x0 has the wrong dimension");
  if (!xi_feasible(model.spec(), xi0, 1e-8)) throw InvalidInput("srpg: xi0 is infeasible");

  const int theta_dim = model.spec().theta_dim();
  const double eta = cfg.tau > 0.0 ? cfg.tau : 1.0;
  Stopwatch clock(eval.record_timing);
  Vector x = coords.project(x0);
  Vector x_anchor = x;
  XiParams xi = xi0;
  Vector xi_anchor = xi.flat();
  RunTrace trace;

  auto record = [&](int k) {
    const Policy anchor = coords.to_policy(coords.project(x_anchor));
    const auto res = xi_residuals(model, coords, x, xi, eta);
    trace.records.push_back(TraceRecord{
        .iter = k,
        .update_count = 2 * static_cast<std::int64_t>(k),
        .phi = robust_value_xi(model, anchor, eval.pgm),
        .stat_res_pi = res.pi,
        .stat_res_p = res.p,
        .wall_ms = clock.elapsed_ms(),
    });
  };

  record(0);
  for (int k = 1; k <= cfg.iterations; ++k) {
    const Vector gx = coords.gradient(x, xi) + cfg.r1 * (x - x_anchor);
    const Vector x_next = coords.project(x - cfg.tau * gx);
    const Vector gxi = grad_j_xi(model, coords.to_policy(x_next), xi).flat() -
                       cfg.r2 * (xi.flat() - xi_anchor);
    const XiParams xi_next = project_xi(
        model.spec(), XiParams::from_flat(xi.flat() + cfg.sigma * gxi, theta_dim));
    x_anchor += cfg.beta * (x_next - x_anchor);
    xi_anchor += cfg.mu * (xi_next.flat() - xi_anchor);
    x = x_next;
    xi = xi_next;
    if (k % eval.eval_every == 0 || k == cfg.iterations) record(k);
  }

  const Vector final_coords = coords.project(x_anchor);
  return XiRunResult{std::move(trace), final_coords, std::move(xi),
                     coords.to_policy(final_coords)};
}

XiRunResult drpg_run_xi(const InventoryModel& model, PolicyParam param,
                        const Vector& x0, const XiParams& xi0,
                        const DrpgConfig& cfg, const EvalOptions& eval) {
  validate(cfg);
  validate(eval.pgm);
  if (eval.eval_every <= 0) throw InvalidInput("drpg: eval_every must be positive");
  const PolicyCoordinates coords(model, param);
  if (x0.size() != coords.dim()) throw InvalidInput("drpg: x0 has the wrong dimension");
  if (!xi_feasible(model.spec(), xi0, 1e-8)) throw InvalidInput("drpg: xi0 is infeasible");

  const std::int64_t cadence = 2 * static_cast<std::int64_t>(eval.eval_every);
  const std::int64_t budget = cfg.total_update_budget;
  Stopwatch clock(eval.record_timing);
  Vector x = coords.project(x0);
  XiParams worst = xi0;
  std::int64_t updates = 0;
  int outer = 0;
  RunTrace trace;

  std::optional<double> phi_cache;
  auto record = [&] {
    if (!phi_cache) phi_cache = robust_value_xi(model, coords.to_policy(x), eval.pgm);
    const auto res = xi_residuals(model, coords, x, worst, cfg.outer_step);
    trace.records.push_back(TraceRecord{
        .iter = outer,
        .update_count = updates,
        .phi = *phi_cache,
        .stat_res_pi = res.pi,
        .stat_res_p = res.p,
        .wall_ms = clock.elapsed_ms(),
    });
  };
  auto advance = [&](std::int64_t target) {
    std::int64_t next_mark = (updates / cadence + 1) * cadence;
    while (next_mark <= target) {
      updates = next_mark;
      record();
      next_mark += cadence;
    }
    updates = target;
  };

  record();
  while (updates < budget) {
    PgmConfig inner = cfg.inner;
    inner.max_iters = static_cast<int>(
        std::min<std::int64_t>(inner.max_iters, budget - updates));
    XiPgmResult solved = pgm_maximize_xi(model, coords.to_policy(x), worst, inner);
    worst = std::move(solved.xi);
    advance(updates + solved.iterations);
    if (updates >= budget) break;

    x = coords.project(x - cfg.outer_step * coords.gradient(x, worst));
    ++outer;
    phi_cache.reset();
    advance(updates + 1);
  }
  if (trace.records.back().iter != outer) record();

  return XiRunResult{std::move(trace), x, std::move(worst), coords.to_policy(x)};
}

}  // namespace rmdp
