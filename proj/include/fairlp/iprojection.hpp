#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fairlp/constraints.hpp"

namespace fairlp {

class DyadicModel;

/// I-projection of a dyadic model h onto {p : F_c(p) = d_c for all c}.
///
/// With pair logits l_ij and multipliers lambda, the projection is again
/// dyadic with h_F,ij(1) = sigmoid(l_ij + lambda_c) for pairs in constraint
/// c and h_F,ij = h_ij for unconstrained pairs.
struct Projection {
  std::vector<double> lambda;
  /// h_F,ij(1) for every pair of the universe.
  std::vector<double> projected;
  /// KL(h_F || h), summed pairwise.
  double kl = 0.0;
  /// L_h(lambda) at the returned multipliers.
  double dual = 0.0;
  /// max_c |d_c - sum_{members} h_F,ij(1)|.
  double dual_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct ProjectionOptions {
  /// Convergence threshold on the max-norm of the dual gradient.
  double tol = 1e-8;
  int max_iters = 500;
  /// Fraction of each constraint's members used to solve for lambda; targets
  /// are scaled by the sampled share. 1 disables subsampling.
  double subsample = 1.0;
  std::uint64_t subsample_seed = 0;
  /// Called after each iteration with (iteration, dual value, residual).
  std::function<void(int, double, double)> on_iteration;
};

/// L_h(lambda) = -sum_ij log Z_ij(lambda) + sum_c lambda_c d_c, with
/// log Z_ij = log(h_ij(0) + h_ij(1) e^lambda_c) for constrained pairs and 0
/// otherwise. Evaluated as softplus(l + lambda) - softplus(l).
double dual_value(std::span<const double> logits, const ConstraintSystem& system, std::span<const double> targets,
                  std::span<const double> lambda);

/// dL/dlambda_c = d_c - sum_{members} sigmoid(l_ij + lambda_c).
std::vector<double> dual_gradient(std::span<const double> logits, const ConstraintSystem& system,
                                  std::span<const double> targets, std::span<const double> lambda);

/// Projection at fixed multipliers (no optimisation).
Projection evaluate_projection(std::span<const double> logits, const ConstraintSystem& system,
                               std::span<const double> targets, std::vector<double> lambda);

/// Maximises the concave dual. The Hessian is diagonal because member sets
/// are disjoint, so every multiplier takes its own safeguarded Newton step.
///
/// Throws NumericalError when a target lies outside (0, |members_c|) or the
/// iteration cap is hit.
Projection project(std::span<const double> logits, const ConstraintSystem& system, std::span<const double> targets,
                   std::span<const double> warm_start = {}, const ProjectionOptions& options = {});

Projection project(const DyadicModel& model, const PairUniverse& universe, const ConstraintSystem& system,
                   std::span<const double> targets, std::span<const double> warm_start = {},
                   const ProjectionOptions& options = {});

/// dL_F/dlogit_ij at fixed lambda* and fixed targets: h_ij(1) - h_F,ij(1) for
/// constrained pairs, 0 elsewhere. Throws if the projection did not converge.
std::vector<double> fairness_grad_logits(const Projection& projection, std::span<const double> logits,
                                         const ConstraintSystem& system);

/// Extra logit gradient from differentiating through d = mean_support h:
/// dL_F/dd * dd/dlogit_ij, with dL_F/dd = sum_c lambda_c |members_c|.
std::vector<double> target_grad_logits(const Projection& projection, std::span<const double> logits,
                                       const ConstraintSystem& system);

}  // namespace fairlp
