#include <gtest/gtest.h>

#include <cmath>

#include "rmdp/gradients.hpp"
#include "rmdp/inventory.hpp"
#include "test_support.hpp"

namespace rmdp {
namespace {

using testing::random_policy;
using testing::rel_err;

const InventoryModel& model() {
  static const InventoryModel m = InventoryModel::generate(InventorySpec::defaults(), 3);
  return m;
}

TEST(InventorySpecTest, Defaults) {
  const InventorySpec spec = InventorySpec::defaults();
  EXPECT_EQ(spec.num_states(), 8);
  EXPECT_EQ(spec.num_actions(), 3);
  EXPECT_EQ(spec.theta_dim(), 2);
  EXPECT_EQ(spec.lambda_dim(), 2);
  EXPECT_NO_THROW(spec.validate());
  InventorySpec bad = spec;
  bad.lambda_center(0) = 0.0;
  EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(FeatureTest, IndependentEvaluation) {
  const InventorySpec spec = InventorySpec::defaults();
  const double pi = 3.141592653589793;
  // State #1 = (0.25, 1.3) against theta center (-1, 2), sigma 1.
  const double t0 = std::exp(-(1.25 * 1.25 + 0.7 * 0.7) / 2.0) / std::sqrt(2 * pi);
  EXPECT_NEAR(feature_theta(spec, 0)(0), t0, 1e-12);
  // Action -3 against lambda centers (1.3, 2.1) and 1, sigma 2.
  const double l0 = std::exp(-(1.05 * 1.05 + 0.8 * 0.8 + 16.0) / 8.0) / (2 * std::sqrt(2 * pi));
  EXPECT_NEAR(feature_lambda(spec, 0, 0)(0), l0, 1e-12);
}

TEST(FeatureTest, PeakAndWideLimit) {
  InventorySpec spec = InventorySpec::defaults();
  spec.states[2] = spec.theta_feature_centers[1];
  EXPECT_DOUBLE_EQ(feature_theta(spec, 2)(1), 1.0 / std::sqrt(2 * 3.141592653589793));
  spec.sigma_theta = 1e6;
  const double peak = 1.0 / (std::sqrt(2 * 3.141592653589793) * 1e6);
  EXPECT_NEAR(feature_theta(spec, 5)(0) / peak, 1.0, 1e-6);
}

TEST(KernelFromXiTest, ZeroThetaRecoversNominal) {
  const XiParams xi{Vector::Zero(2), model().spec().lambda_center};
  const Matrix p = kernel_from_xi(model(), xi).matrix();
  EXPECT_LE((p - model().mdp().nominal().matrix()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(KernelFromXiTest, RowStochasticWithNominalSupport) {
  const Matrix p = kernel_from_xi(model(), model().center()).matrix();
  const Matrix& nominal = model().mdp().nominal().matrix();
  for (int r = 0; r < p.rows(); ++r) {
    EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
    for (int c = 0; c < p.cols(); ++c) EXPECT_EQ(p(r, c) > 0.0, nominal(r, c) > 0.0);
  }
}

TEST(KernelFromXiTest, ConstantFeaturesCancel) {
  InventorySpec spec = InventorySpec::defaults();
  spec.sigma_theta = 1e12;
  const InventoryModel flat_model(spec, model().mdp());
  const Matrix p = kernel_from_xi(flat_model, flat_model.center()).matrix();
  EXPECT_LE((p - model().mdp().nominal().matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradLogKernelTest, MatchesFiniteDifferencesAndHasZeroMean) {
  const XiParams xi{Vector{{0.1, 1.2}}, Vector{{0.9, 0.4}}};
  const Matrix& nominal = model().mdp().nominal().matrix();
  for (int s = 0; s < 8; ++s) {
    for (int a = 0; a < 3; ++a) {
      const int r = s * 3 + a;
      const Matrix p = kernel_from_xi(model(), xi).matrix();
      Vector mean = Vector::Zero(4);
      for (int t = 0; t < 8; ++t) {
        if (nominal(r, t) == 0.0) {
          EXPECT_THROW(grad_log_kernel(model(), xi, s, a, t), InvalidInput);
          continue;
        }
        const Vector g = grad_log_kernel(model(), xi, s, a, t).flat();
        const auto f = [&](const Vector& x) {
          return std::log(kernel_from_xi(model(), XiParams::from_flat(x, 2))(s, a, t));
        };
        // Near-certain successors have scores at rounding level, hence the floor.
        const Vector fd = finite_diff_grad(f, xi.flat());
        EXPECT_LT((g - fd).norm() / std::max(fd.norm(), 1e-4), 1e-5);
        mean += p(r, t) * g;
      }
      EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(GradJXiTest, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const InventoryModel m = InventoryModel::generate(InventorySpec::defaults(), seed);
    const Policy pi = random_policy(seed + 100, 8, 3);
    const XiParams xi = project_xi(
        m.spec(), XiParams{m.spec().theta_center + Vector{{0.3, -0.2}},
                           m.spec().lambda_center + Vector{{-0.2, 0.1}}});
    const auto f = [&](const Vector& x) {
      return objective_j(m.mdp(), pi, kernel_from_xi(m, XiParams::from_flat(x, 2)));
    };
    EXPECT_LT(rel_err(grad_j_xi(m, pi, xi).flat(), finite_diff_grad(f, xi.flat())), 1e-4);
  }
}

TEST(GradJXiTest, ZeroCostGivesZeroGradient) {
  const TabularRmdp& base = model().mdp();
  const TabularRmdp zero(8, 3, Matrix::Zero(24, 8), base.gamma(), base.initial_dist(),
                         base.nominal());
  const InventoryModel m(InventorySpec::defaults(), zero);
  EXPECT_EQ(grad_j_xi(m, Policy::uniform(8, 3), m.center()).flat().cwiseAbs().maxCoeff(), 0.0);
}

TEST(SoftmaxPolicyTest, UniformAtZeroAndGreedyLimit) {
  const Policy uniform = policy_from_w(model(), Vector::Zero(2));
  EXPECT_LT((uniform.matrix().array() - 1.0 / 3.0).abs().maxCoeff(), 1e-15);
  const Vector w{{40.0, -60.0}};
  const Policy greedy = policy_from_w(model(), 1e3 * w);
  for (int s = 0; s < 8; ++s) {
    Eigen::Index best = 0;
    Vector scores(3);
    for (int a = 0; a < 3; ++a) scores(a) = w.dot(feature_lambda(model().spec(), s, a));
    scores.maxCoeff(&best);
    EXPECT_NEAR(greedy(s, static_cast<int>(best)), 1.0, 1e-6);
  }
}

TEST(GradJWTest, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const InventoryModel m = InventoryModel::generate(InventorySpec::defaults(), seed);
    Rng rng(seed + 7);
    const Vector w{{rng.uniform(-3, 3), rng.uniform(-3, 3)}};
    const auto f = [&](const Vector& x) {
      return objective_j(m.mdp(), policy_from_w(m, x), kernel_from_xi(m, m.center()));
    };
    EXPECT_LT(rel_err(grad_j_w(m, w, m.center()), finite_diff_grad(f, w)), 1e-4);
  }
}

TEST(ProjectXiTest, FeasiblePointIsFixedAndFarPointIsClipped) {
  const InventorySpec spec = InventorySpec::defaults();
  const XiParams inside{spec.theta_center, spec.lambda_center};
  const XiParams same = project_xi(spec, inside);
  EXPECT_EQ(same.theta, inside.theta);
  EXPECT_EQ(same.lambda, inside.lambda);
  const XiParams far = project_xi(spec, {spec.theta_center + Vector{{50.0, 0.0}}, spec.lambda_center});
  EXPECT_NEAR(far.theta(0), spec.theta_center(0) + 1.0, 1e-12);
  EXPECT_NEAR(far.theta(1), spec.theta_center(1), 1e-12);
  const XiParams neg = project_xi(spec, {spec.theta_center, Vector{{-5.0, -5.0}}});
  EXPECT_TRUE(xi_feasible(spec, neg, 1e-8));
  EXPECT_GE(neg.lambda.minCoeff(), kLambdaMin - 1e-12);
}

TEST(ProjectXiTest, LambdaMatchesGridOracle) {
  InventorySpec spec = InventorySpec::defaults();
  spec.lambda_center = Vector{{0.3, 0.2}};
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector raw{{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)}};
    const Vector got = project_xi(spec, {spec.theta_center, raw}).lambda;
    double best = INFINITY;
    Vector arg(2);
    for (double u = -1.0; u <= 1.0; u += 1e-3) {
      for (double v = -1.0; v <= 1.0; v += 1e-3) {
        const Vector z = spec.lambda_center + Vector{{u, v}};
        if (std::abs(u) + std::abs(v) > 1.0 || z.minCoeff() < kLambdaMin) continue;
        if ((z - raw).squaredNorm() < best) {
          best = (z - raw).squaredNorm();
          arg = z;
        }
      }
    }
    EXPECT_LT((got - arg).norm(), 2e-3) << "trial " << trial;
  }
}

TEST(PolicyCoordinatesTest, TabularRoundTripAndProjection) {
  const PolicyCoordinates coords(model(), PolicyParam::kTabular);
  EXPECT_EQ(coords.dim(), 24);
  const Policy pi = random_policy(5, 8, 3);
  EXPECT_LT((coords.to_policy(coords.from_policy(pi)).matrix() - pi.matrix()).cwiseAbs().maxCoeff(),
            1e-15);
  const Vector projected = coords.project(Vector::Constant(24, 2.0));
  EXPECT_LT((projected.array() - 1.0 / 3.0).abs().maxCoeff(), 1e-15);
  const PolicyCoordinates soft(model(), PolicyParam::kSoftmax);
  EXPECT_EQ(soft.dim(), 2);
  const Vector w{{0.4, -0.3}};
  EXPECT_EQ(soft.project(w), w);
  EXPECT_EQ(soft.gradient(w, model().center()), grad_j_w(model(), w, model().center()));
}

TEST(XiPgmTest, ImprovesOnCenterAndStaysFeasible) {
  const Policy pi = random_policy(8, 8, 3);
  const XiPgmResult r = pgm_maximize_xi(model(), pi, model().center(), {});
  EXPECT_GE(r.value, objective_j(model().mdp(), pi, kernel_from_xi(model(), model().center())));
  EXPECT_TRUE(xi_feasible(model().spec(), r.xi, 1e-8));
  EXPECT_DOUBLE_EQ(robust_value_xi(model(), pi, {}), r.value);
}

TEST(XiRunTest, SrpgDecreasesPhi) {
  SrpgConfig cfg;
  cfg.r1 = cfg.r2 = 1.0;
  cfg.iterations = 100;
  EvalOptions eval;
  eval.eval_every = 50;
  const XiRunResult r =
      srpg_run_xi(model(), PolicyParam::kSoftmax, Vector{{1.5, -1.0}}, model().center(), cfg, eval);
  EXPECT_LT(r.trace.final_phi(), r.trace.initial_phi());
  EXPECT_EQ(r.trace.records.back().update_count, 200);
}

TEST(XiRunTest, DrpgSpendsBudgetExactly) {
  DrpgConfig cfg;
  cfg.total_update_budget = 150;
  const XiRunResult r =
      drpg_run_xi(model(), PolicyParam::kTabular,
                  PolicyCoordinates(model(), PolicyParam::kTabular).from_policy(random_policy(9, 8, 3)),
                  model().center(), cfg, {});
  EXPECT_EQ(r.trace.records.back().update_count, 150);
  EXPECT_TRUE(xi_feasible(model().spec(), r.final_xi, 1e-8));
}

}  // namespace
}  // namespace rmdp
