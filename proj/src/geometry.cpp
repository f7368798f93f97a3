#include "rmdp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace rmdp {

Vector project_simplex(const Vector& y, double radius) {
  if (y.size() == 0) throw InvalidInput("project_simplex: empty input");
  if (!(radius > 0.0)) throw InvalidInput("project_simplex: radius must be positive");
  if (!y.allFinite()) throw InvalidInput("project_simplex: non-finite input");

  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double t = (cumulative - radius) / static_cast<double>(j + 1);
    if (sorted[j] - t > 0.0) threshold = t;
  }
  return (y.array() - threshold).cwiseMax(0.0).matrix();
}

Vector project_l1_ball(const Vector& y, const Vector& center, double kappa) {
  if (y.size() != center.size()) {
    throw InvalidInput("project_l1_ball: dimension mismatch");
  }
  if (!(kappa >= 0.0)) throw InvalidInput("project_l1_ball: negative radius");
  const Vector offset = y - center;
  if (offset.lpNorm<1>() <= kappa) return y;
  if (kappa == 0.0) return center;
  const Vector magnitude = project_simplex(offset.cwiseAbs(), kappa);
  return center + offset.array().sign().matrix().cwiseProduct(magnitude);
}

DykstraResult dykstra(const Vector& y, const Projector& first,
                      const Projector& last, const DykstraOptions& opts) {
  Vector x = y;
  Vector p = Vector::Zero(y.size());
  Vector q = Vector::Zero(y.size());
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Vector a = first(x + p);
    p += x - a;
    Vector b = last(a + q);
    q += a - b;
    const double change = (b - x).norm();
    const double gap = (a - b).norm();
    x = std::move(b);
    if (change < opts.tol && gap < opts.tol) return {x, it};
  }
  return {x, opts.max_iters};
}

namespace {

void require_feasible(double residual, int iterations, const DykstraOptions& opts,
                      const char* where) {
  if (residual > opts.feasibility_tol) {
    std::ostringstream os;
    os << where << ": Dykstra stopped after " << iterations
       << " iterations with constraint violation " << residual;
    throw ProjectionError(os.str(), residual, iterations);
  }
}

// Shifts each block along the all-ones direction onto its unit-sum plane.
// Every target set lies in those planes, so the projection is unchanged while
// Dykstra no longer has to cancel a large normal component.
Vector onto_unit_sum_planes(const Vector& v, int blocks, int width) {
  Vector out = v;
  for (int b = 0; b < blocks; ++b) {
    auto seg = out.segment(b * width, width);
    seg.array() -= (seg.sum() - 1.0) / width;
  }
  return out;
}

// Projection onto simplex ∩ L1 ball, trying the two single-set projections
// before falling back to Dykstra.
Vector project_simplex_l1(const Vector& y, const Vector& center, double kappa,
                          const DykstraOptions& opts) {
  const Vector on_simplex = project_simplex(y);
  if ((on_simplex - center).lpNorm<1>() <= kappa) return on_simplex;
  if (kappa == 0.0) return center;
  const Vector in_ball = project_l1_ball(y, center, kappa);
  if (in_ball.minCoeff() >= 0.0 && std::abs(in_ball.sum() - 1.0) <= 1e-14) {
    return in_ball;
  }
  auto result = dykstra(
      onto_unit_sum_planes(y, 1, static_cast<int>(y.size())),
      [&](const Vector& v) { return project_l1_ball(v, center, kappa); },
      [](const Vector& v) { return project_simplex(v); }, opts);
  const double residual =
      std::max(0.0, (result.point - center).lpNorm<1>() - kappa);
  require_feasible(residual, result.iterations, opts, "project_sa_rect");
  return result.point;
}

Vector project_blocks_onto_simplices(const Vector& v, int blocks, int width) {
  Vector out(v.size());
  for (int b = 0; b < blocks; ++b) {
    out.segment(b * width, width) = project_simplex(v.segment(b * width, width));
  }
  return out;
}

}  // namespace

Matrix project_kernel_rows(const Matrix& y) {
  Matrix out(y.rows(), y.cols());
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    out.row(r) = project_simplex(y.row(r).transpose()).transpose();
  }
  return out;
}

Matrix project_policy_rows(const Matrix& y) { return project_kernel_rows(y); }

Matrix project_sa_rect(const Matrix& y, const Matrix& nominal,
                       const Vector& kappa, const DykstraOptions& opts) {
  if (y.rows() != nominal.rows() || y.cols() != nominal.cols() ||
      kappa.size() != y.rows()) {
    throw InvalidInput("project_sa_rect: shape mismatch");
  }
  Matrix out(y.rows(), y.cols());
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    if (kappa(r) < 0.0) throw InvalidInput("project_sa_rect: negative radius");
    out.row(r) = project_simplex_l1(y.row(r).transpose(),
                                    nominal.row(r).transpose(), kappa(r), opts)
                     .transpose();
  }
  return out;
}

Matrix project_s_rect(const Matrix& y, const Matrix& nominal,
                      const Vector& kappa, int num_actions,
                      const DykstraOptions& opts) {
  const Eigen::Index S = y.cols();
  const int A = num_actions;
  if (y.rows() != S * A || nominal.rows() != y.rows() ||
      nominal.cols() != y.cols() || kappa.size() != S) {
    throw InvalidInput("project_s_rect: shape mismatch");
  }
  const int width = static_cast<int>(S);
  Matrix out(y.rows(), y.cols());
  for (Eigen::Index s = 0; s < S; ++s) {
    if (kappa(s) < 0.0) throw InvalidInput("project_s_rect: negative radius");
    // Flatten the A x S block row-major so each action's row is contiguous.
    const Matrix block_y = y.middleRows(s * A, A);
    const Matrix block_c = nominal.middleRows(s * A, A);
    const Vector flat_y = block_y.transpose().reshaped();
    const Vector flat_c = block_c.transpose().reshaped();
    const double radius = kappa(s);

    const Vector on_simplices = project_blocks_onto_simplices(flat_y, A, width);
    Vector flat_out;
    if ((on_simplices - flat_c).lpNorm<1>() <= radius) {
      flat_out = on_simplices;
    } else if (radius == 0.0) {
      flat_out = flat_c;
    } else {
      auto result = dykstra(
          onto_unit_sum_planes(flat_y, A, width),
          [&](const Vector& v) { return project_l1_ball(v, flat_c, radius); },
          [&](const Vector& v) {
            return project_blocks_onto_simplices(v, A, width);
          },
          opts);
      const double residual =
          std::max(0.0, (result.point - flat_c).lpNorm<1>() - radius);
      require_feasible(residual, result.iterations, opts, "project_s_rect");
      flat_out = std::move(result.point);
    }
    out.middleRows(s * A, A) = flat_out.reshaped(width, A).transpose();
  }
  return out;
}

Vector project_box_l1(const Vector& y, const Vector& center, double kappa,
                      const std::optional<Vector>& lower_bounds,
                      const DykstraOptions& opts) {
  if (y.size() != center.size()) {
    throw InvalidInput("project_box_l1: dimension mismatch");
  }
  if (!(kappa >= 0.0)) throw InvalidInput("project_box_l1: negative radius");
  if (!lower_bounds) return project_l1_ball(y, center, kappa);

  const Vector& lower = *lower_bounds;
  if (lower.size() != y.size()) {
    throw InvalidInput("project_box_l1: bound dimension mismatch");
  }
  const double shortfall = (lower - center).cwiseMax(0.0).sum();
  if (shortfall > kappa) {
    throw InvalidInput("project_box_l1: empty set, center violates bounds by more than kappa");
  }
  const auto clip = [&](const Vector& v) -> Vector { return v.cwiseMax(lower); };
  const Vector clipped = clip(y);
  if ((clipped - center).lpNorm<1>() <= kappa) return clipped;
  const Vector in_ball = project_l1_ball(y, center, kappa);
  if ((in_ball - lower).minCoeff() >= 0.0) return in_ball;

  auto result = dykstra(
      y, [&](const Vector& v) { return project_l1_ball(v, center, kappa); },
      clip, opts);
  const double residual =
      std::max(0.0, (result.point - center).lpNorm<1>() - kappa);
  require_feasible(residual, result.iterations, opts, "project_box_l1");
  return result.point;
}

}  // namespace rmdp
