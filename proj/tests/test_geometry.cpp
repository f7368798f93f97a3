#include <gtest/gtest.h>

#include <functional>

#include "rmdp/geometry.hpp"
#include "rmdp/rng.hpp"

namespace rmdp {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Eigen::VectorXd random_vector(Rng& rng, int n, double scale) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(-scale, scale);
  return v;
}

Eigen::VectorXd random_simplex_point(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform() + 0.01;
  return v / v.sum();
}

// Brute-force nearest feasible point of the 2-simplex ∩ L1 ball on a grid of
// spacing 1e-3.
Eigen::VectorXd grid_project_simplex_l1(const Eigen::VectorXd& y, const Eigen::VectorXd& c,
                                        double kappa) {
  const int n = 1000;
  double best = INFINITY;
  Eigen::VectorXd arg(3);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const Eigen::Vector3d x(i / double(n), j / double(n), (n - i - j) / double(n));
      if ((x - c).lpNorm<1>() > kappa + 1e-12) continue;
      const double dist = (x - y).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = x;
      }
    }
  }
  return arg;
}

TEST(SimplexProjectionTest, ClosedForms) {
  EXPECT_TRUE(project_simplex(vec({0.2, 0.8})).isApprox(vec({0.2, 0.8})));
  EXPECT_TRUE(project_simplex(vec({2.0, 0.0})).isApprox(vec({1.0, 0.0})));
  EXPECT_TRUE(project_simplex(vec({5.0, 5.0, 5.0})).isApprox(vec({1.0, 1.0, 1.0}) / 3.0));
  EXPECT_LT((project_simplex(vec({0.6, 0.3, -0.2})) - vec({0.65, 0.35, 0.0})).norm(), 1e-15);
  EXPECT_LT((project_simplex(vec({0.6, 0.6})) - vec({0.5, 0.5})).norm(), 1e-15);
  EXPECT_LT((project_simplex(vec({1.0, 3.0}), 2.0) - vec({0.0, 2.0})).norm(), 1e-15);
}

TEST(SimplexProjectionTest, OptimalAgainstEveryVertex) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(6));
    const Eigen::VectorXd y = random_vector(rng, n, 3.0);
    const Eigen::VectorXd x = project_simplex(y);
    EXPECT_GE(x.minCoeff(), 0.0);
    EXPECT_NEAR(x.sum(), 1.0, 1e-12);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd z = Eigen::VectorXd::Unit(n, i);
      EXPECT_LE((y - x).dot(z - x), 1e-12);
    }
  }
}

TEST(L1BallProjectionTest, ClosedForms) {
  const Eigen::VectorXd c = vec({0.0, 0.0});
  EXPECT_TRUE(project_l1_ball(vec({0.2, 0.3}), c, 1.0).isApprox(vec({0.2, 0.3})));
  // Soft threshold by 0.5: (2, 1) -> (1.5, 0.5).
  EXPECT_LT((project_l1_ball(vec({2.0, 1.0}), c, 2.0) - vec({1.5, 0.5})).norm(), 1e-15);
  EXPECT_LT((project_l1_ball(vec({-3.0, 1.0}), vec({1.0, 1.0}), 1.0) - vec({0.0, 1.0})).norm(),
            1e-15);
  EXPECT_EQ(project_l1_ball(vec({4.0, 2.0}), c, 0.0), c);
  EXPECT_LT((project_l1_ball(vec({1.0, 1.0}), c, 1.0) - vec({0.5, 0.5})).norm(), 1e-15);
}

TEST(L1BallProjectionTest, OptimalAgainstEveryVertex) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(5));
    const Eigen::VectorXd y = random_vector(rng, n, 3.0);
    const Eigen::VectorXd c = random_vector(rng, n, 1.0);
    const double kappa = rng.uniform(0.1, 2.0);
    const Eigen::VectorXd x = project_l1_ball(y, c, kappa);
    EXPECT_LE((x - c).lpNorm<1>(), kappa + 1e-12);
    for (int i = 0; i < n; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const Eigen::VectorXd z = c + sign * kappa * Eigen::VectorXd::Unit(n, i);
        EXPECT_LE((y - x).dot(z - x), 1e-10);
      }
    }
  }
}

TEST(DykstraTest, TwoHalfPlanes) {
  const Projector below_x = [](const Eigen::VectorXd& v) {
    Eigen::VectorXd out = v;
    out(0) = std::min(out(0), 0.0);
    return out;
  };
  const Projector below_y = [](const Eigen::VectorXd& v) {
    Eigen::VectorXd out = v;
    out(1) = std::min(out(1), 0.0);
    return out;
  };
  const DykstraResult r = dykstra(vec({1.0, 2.0}), below_x, below_y);
  EXPECT_LT(r.point.norm(), 1e-12);
}

TEST(SaRectProjectionTest, MatchesGridOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::VectorXd c = random_simplex_point(rng, 3);
    const Eigen::VectorXd y = random_vector(rng, 3, 1.5);
    Matrix ym = y.transpose();
    Matrix cm = c.transpose();
    const Eigen::VectorXd x =
        project_sa_rect(ym, cm, Eigen::VectorXd::Constant(1, 0.3)).row(0).transpose();
    EXPECT_LT((x - grid_project_simplex_l1(y, c, 0.3)).norm(), 2e-3) << "trial " << trial;
    EXPECT_LE((x - c).lpNorm<1>(), 0.3 + 1e-8);
    EXPECT_GE(x.minCoeff(), 0.0);
    EXPECT_NEAR(x.sum(), 1.0, 1e-8);
  }
}

TEST(SaRectProjectionTest, FarInputsStillConverge) {
  Rng rng(8);
  for (int trial = 0; trial < 6; ++trial) {
    const Eigen::VectorXd c = random_simplex_point(rng, 3);
    const Eigen::VectorXd y = random_vector(rng, 3, 100.0);
    const Eigen::VectorXd x = project_sa_rect(y.transpose(), c.transpose(),
                                              Eigen::VectorXd::Constant(1, 0.25))
                                  .row(0)
                                  .transpose();
    EXPECT_LT((x - grid_project_simplex_l1(y, c, 0.25)).norm(), 2e-3);
  }
}

TEST(SaRectProjectionTest, DegenerateRadii) {
  Rng rng(9);
  const Eigen::VectorXd c = random_simplex_point(rng, 4);
  const Eigen::VectorXd y = random_vector(rng, 4, 2.0);
  const Matrix zero = project_sa_rect(y.transpose(), c.transpose(), Eigen::VectorXd::Zero(1));
  EXPECT_EQ(Eigen::VectorXd(zero.row(0).transpose()), c);
  const Matrix wide =
      project_sa_rect(y.transpose(), c.transpose(), Eigen::VectorXd::Constant(1, 2.0));
  EXPECT_LT((Eigen::VectorXd(wide.row(0).transpose()) - project_simplex(y)).norm(), 1e-15);
}

TEST(SRectProjectionTest, MatchesGridOracle) {
  // S = 2, A = 2: each row is (x, 1 - x), so a state's feasible block is a
  // region of the unit square in (x0, x1).
  Rng rng(10);
  const int n = 2000;
  for (int trial = 0; trial < 4; ++trial) {
    Matrix c(4, 2);
    Matrix y(4, 2);
    for (int r = 0; r < 4; ++r) {
      c.row(r) = random_simplex_point(rng, 2).transpose();
      y.row(r) = random_vector(rng, 2, 1.5).transpose();
    }
    const Eigen::VectorXd kappa = Eigen::VectorXd::Constant(2, 0.4);
    const Matrix x = project_s_rect(y, c, kappa, 2);
    for (int s = 0; s < 2; ++s) {
      const Matrix cs = c.middleRows(2 * s, 2);
      const Matrix ys = y.middleRows(2 * s, 2);
      double best = INFINITY;
      Matrix arg(2, 2);
      for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
          Matrix z(2, 2);
          z << i / double(n), 1 - i / double(n), j / double(n), 1 - j / double(n);
          if ((z - cs).cwiseAbs().sum() > kappa(s) + 1e-12) continue;
          const double d = (z - ys).squaredNorm();
          if (d < best) {
            best = d;
            arg = z;
          }
        }
      }
      EXPECT_LT((x.middleRows(2 * s, 2) - arg).norm(), 2e-3) << "trial " << trial;
      EXPECT_LE((x.middleRows(2 * s, 2) - cs).cwiseAbs().sum(), kappa(s) + 1e-8);
    }
  }
}

TEST(SRectProjectionTest, LargeRadiusIsRowwiseSimplex) {
  Rng rng(14);
  Matrix c(6, 3);
  Matrix y(6, 3);
  for (int r = 0; r < 6; ++r) {
    c.row(r) = random_simplex_point(rng, 3).transpose();
    y.row(r) = random_vector(rng, 3, 2.0).transpose();
  }
  const Matrix x = project_s_rect(y, c, Eigen::VectorXd::Constant(3, 4.0), 2);
  EXPECT_LT((x - project_kernel_rows(y)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((project_s_rect(c, c, Eigen::VectorXd::Constant(3, 0.3), 2) - c).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(ProjectionPropertiesTest, IdempotentAndNonExpansive) {
  Rng rng(15);
  const int S = 4;
  const int A = 3;
  Matrix c(S * A, S);
  for (int r = 0; r < S * A; ++r) c.row(r) = random_simplex_point(rng, S).transpose();
  Eigen::VectorXd ks(S);
  Eigen::VectorXd ksa(S * A);
  for (int s = 0; s < S; ++s) ks(s) = rng.uniform(0.1, 0.5);
  for (int r = 0; r < S * A; ++r) ksa(r) = rng.uniform(0.1, 0.5);
  const auto s_rect = [&](const Matrix& y) { return project_s_rect(y, c, ks, A); };
  const auto sa_rect = [&](const Matrix& y) { return project_sa_rect(y, c, ksa); };
  for (int trial = 0; trial < 10; ++trial) {
    Matrix y(S * A, S);
    Matrix y2(S * A, S);
    for (int r = 0; r < S * A; ++r) {
      y.row(r) = random_vector(rng, S, 2.0).transpose();
      y2.row(r) = random_vector(rng, S, 2.0).transpose();
    }
    for (const auto& proj : {std::function<Matrix(const Matrix&)>(s_rect),
                             std::function<Matrix(const Matrix&)>(sa_rect)}) {
      const Matrix x = proj(y);
      EXPECT_LT((proj(x) - x).norm(), 1e-9);
      EXPECT_LE((x - proj(y2)).norm(), (y - y2).norm() + 1e-8);
    }
  }
}

TEST(SRectProjectionTest, FeasibleOnLargerBlocks) {
  Rng rng(11);
  const int S = 5;
  const int A = 6;
  Matrix c(S * A, S);
  for (int r = 0; r < S * A; ++r) c.row(r) = random_simplex_point(rng, S).transpose();
  Eigen::VectorXd kappa(S);
  for (int s = 0; s < S; ++s) kappa(s) = rng.uniform(0.1, 0.5);
  for (double scale : {0.5, 5.0, 50.0}) {
    Matrix y(S * A, S);
    for (int r = 0; r < S * A; ++r) y.row(r) = random_vector(rng, S, scale).transpose();
    const Matrix x = project_s_rect(y, c, kappa, A);
    EXPECT_GE(x.minCoeff(), -1e-12);
    for (int r = 0; r < S * A; ++r) EXPECT_NEAR(x.row(r).sum(), 1.0, 1e-8);
    for (int s = 0; s < S; ++s) {
      EXPECT_LE((x.middleRows(s * A, A) - c.middleRows(s * A, A)).cwiseAbs().sum(),
                kappa(s) + 1e-8);
    }
  }
}

TEST(SRectProjectionTest, IterationCapRaisesProjectionError) {
  Rng rng(12);
  Matrix c(6, 3);
  Matrix y(6, 3);
  for (int r = 0; r < 6; ++r) {
    c.row(r) = random_simplex_point(rng, 3).transpose();
    y.row(r) = random_vector(rng, 3, 50.0).transpose();
  }
  DykstraOptions opts;
  opts.max_iters = 2;
  try {
    project_s_rect(y, c, Eigen::VectorXd::Constant(3, 0.1), 2, opts);
    FAIL() << "expected ProjectionError";
  } catch (const ProjectionError& e) {
    EXPECT_EQ(e.iterations(), 2);
    EXPECT_GT(e.residual(), 1e-8);
  }
}

TEST(BoxL1ProjectionTest, MatchesGridOracle) {
  Rng rng(13);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::VectorXd c = random_vector(rng, 2, 1.0);
    const double kappa = rng.uniform(0.2, 1.0);
    const Eigen::VectorXd lower = c + random_vector(rng, 2, 0.3);
    if ((lower - c).cwiseMax(0.0).sum() > kappa) continue;
    const Eigen::VectorXd y = c + random_vector(rng, 2, 2.0);
    const Eigen::VectorXd x = project_box_l1(y, c, kappa, lower);
    const double h = 1e-3;
    double best = INFINITY;
    Eigen::VectorXd arg(2);
    for (double u = -kappa; u <= kappa; u += h) {
      for (double v = -kappa; v <= kappa; v += h) {
        const Eigen::Vector2d z = c + Eigen::Vector2d(u, v);
        if (std::abs(u) + std::abs(v) > kappa || z(0) < lower(0) || z(1) < lower(1)) continue;
        const double d = (z - y).squaredNorm();
        if (d < best) {
          best = d;
          arg = z;
        }
      }
    }
    EXPECT_LT((x - arg).norm(), 2e-3) << "trial " << trial;
    EXPECT_LE((x - c).lpNorm<1>(), kappa + 1e-8);
    EXPECT_GE((x - lower).minCoeff(), -1e-8);
  }
}

TEST(BoxL1ProjectionTest, EmptySetThrows) {
  EXPECT_THROW(project_box_l1(vec({0, 0}), vec({0, 0}), 0.5, vec({0.4, 0.4})), InvalidInput);
}

TEST(BoxL1ProjectionTest, FeasiblePointIsFixed) {
  const Eigen::VectorXd p = vec({0.1, -0.2});
  EXPECT_EQ(project_box_l1(p, vec({0, 0}), 0.5, vec({-1, -1})), p);
}

}  // namespace
}  // namespace rmdp
