#pragma once

#include <functional>
#include <optional>
#include <stdexcept>

#include "rmdp/tabular.hpp"

namespace rmdp {

// Dykstra failed to reach a feasible point within its iteration cap.
class ProjectionError : public std::runtime_error {
 public:
  ProjectionError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

struct DykstraOptions {
  double tol = 1e-10;    // on successive iterates and on the gap between sets
  int max_iters = 5000;
  double feasibility_tol = 1e-8;
};

// Lower bound standing in for strict positivity of the kernel temperature
// parameters.
inline constexpr double kLambdaMin = 1e-6;

// Euclidean projection onto {x >= 0, sum x = radius} by sort and threshold.
Vector project_simplex(const Vector& y, double radius = 1.0);

// Euclidean projection onto {x : ||x - center||_1 <= kappa}.
Vector project_l1_ball(const Vector& y, const Vector& center, double kappa);

using Projector = std::function<Vector(const Vector&)>;

struct DykstraResult {
  Vector point;
  int iterations;
};

// Projection onto the intersection of two closed convex sets. The returned
// point comes out of `last`, so it is exactly feasible for that set.
DykstraResult dykstra(const Vector& y, const Projector& first,
                      const Projector& last, const DykstraOptions& opts = {});

// Each row of an (S*A) x S matrix onto the simplex.
Matrix project_kernel_rows(const Matrix& y);
// Each row of an S x A matrix onto the simplex.
Matrix project_policy_rows(const Matrix& y);

// Row r = s*A + a onto simplex ∩ {||x - nominal_r||_1 <= kappa[r]}.
Matrix project_sa_rect(const Matrix& y, const Matrix& nominal,
                       const Vector& kappa, const DykstraOptions& opts = {});

// Block of A rows for state s onto (simplex)^A ∩ joint L1 ball of radius
// kappa[s] around the nominal block.
Matrix project_s_rect(const Matrix& y, const Matrix& nominal,
                      const Vector& kappa, int num_actions,
                      const DykstraOptions& opts = {});

// Projection onto {||x - center||_1 <= kappa} ∩ {x >= lower_bounds}.
Vector project_box_l1(const Vector& y, const Vector& center, double kappa,
                      const std::optional<Vector>& lower_bounds = std::nullopt,
                      const DykstraOptions& opts = {});

}  // namespace rmdp
