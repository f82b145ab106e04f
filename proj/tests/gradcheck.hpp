#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fairlp/constraints.hpp"
#include "fairlp/iprojection.hpp"
#include "fairlp/models.hpp"
#include "fairlp/numeric.hpp"

namespace testing {

/// L_A + gamma L_F at the model's current parameters, with the constraint
/// targets held at `targets`.
inline double total_loss(const fairlp::DyadicModel& model, const fairlp::PairUniverse& universe,
                         std::span<const std::uint8_t> labels, const fairlp::ConstraintSystem& system,
                         std::span<const double> targets, double gamma) {
  const auto logits = model.logits(universe.pairs());
  double value = fairlp::cross_entropy(logits, labels);
  if (gamma > 0.0 && system.size() > 0) value += gamma * fairlp::project(logits, system, targets).kl;
  return value;
}

/// Analytic gradient of total_loss: (p - a) + gamma (h - h_F) pushed through
/// the logit chain rule.
inline std::vector<double> total_gradient(const fairlp::DyadicModel& model, const fairlp::PairUniverse& universe,
                                          std::span<const std::uint8_t> labels,
                                          const fairlp::ConstraintSystem& system, std::span<const double> targets,
                                          double gamma) {
  const auto logits = model.logits(universe.pairs());
  std::vector<double> w(logits.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = fairlp::sigmoid(logits[k]) - labels[k];
  if (gamma > 0.0 && system.size() > 0) {
    const auto proj = fairlp::project(logits, system, targets);
    const auto fair = fairlp::fairness_grad_logits(proj, logits, system);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += gamma * fair[k];
  }
  std::vector<double> grad(model.parameters().size(), 0.0);
  model.accumulate_gradient(universe.pairs(), w, grad);
  return grad;
}

struct GradCheck {
  double worst_relative = 0.0;
  std::size_t coordinates = 0;
};

/// Per-coordinate relative error |fd - analytic| / max(|fd|, |analytic|, floor)
/// using central differences with step h.
inline GradCheck check_total_gradient(fairlp::DyadicModel& model, const fairlp::PairUniverse& universe,
                                      std::span<const std::uint8_t> labels, const fairlp::ConstraintSystem& system,
                                      std::span<const double> targets, double gamma, double h = 1e-5,
                                      double floor = 1e-6) {
  const auto analytic = total_gradient(model, universe, labels, system, targets, gamma);
  auto params = model.parameters();
  GradCheck out;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + h;
    const double up = total_loss(model, universe, labels, system, targets, gamma);
    params[k] = saved - h;
    const double down = total_loss(model, universe, labels, system, targets, gamma);
    params[k] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double err = std::abs(fd - analytic[k]) / std::max({std::abs(fd), std::abs(analytic[k]), floor});
    out.worst_relative = std::max(out.worst_relative, err);
    ++out.coordinates;
  }
  return out;
}

}  // namespace testing
