#include "fairlp/iprojection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fairlp/error.hpp"
#include "fairlp/models.hpp"
#include "fairlp/numeric.hpp"

namespace fairlp {

namespace {

constexpr double kMaxNewtonStep = 30.0;

/// log(h(0) + h(1) e^lambda) for a pair with logit l.
double log_partition(double l, double lambda) {
  if (std::abs(lambda) < 1.0) return std::log1p(sigmoid(l) * std::expm1(lambda));
  return softplus(l + lambda) - softplus(l);
}

struct MemberStats {
  double mass = 0.0;      // sum sigmoid(l + lambda)
  double variance = 0.0;  // sum sigmoid (1 - sigmoid)
};

MemberStats member_stats(std::span<const double> logits, std::span<const std::size_t> members, double lambda) {
  CompensatedSum mass;
  double variance = 0.0;
  for (auto k : members) {
    const double q = sigmoid(logits[k] + lambda);
    mass.add(q);
    variance += q * (1.0 - q);
  }
  return {mass.value(), variance};
}

void check_targets(const ConstraintSystem& system, std::span<const double> targets) {
  if (targets.size() != system.size())
    throw InputError("expected " + std::to_string(system.size()) + " targets, got " + std::to_string(targets.size()));
  for (std::size_t c = 0; c < system.size(); ++c) {
    const double m = static_cast<double>(system.constraint(c).members.size());
    if (!(targets[c] > 0.0 && targets[c] < m)) {
      const auto& gp = system.constraint(c).group_pair;
      std::ostringstream msg;
      msg << "constraint " << c << " (block " << gp.s << "," << gp.t << ") is infeasible at the interior: target "
          << targets[c] << " outside (0, " << m << ")";
      throw NumericalError(msg.str());
    }
  }
}

}  // namespace

double dual_value(std::span<const double> logits, const ConstraintSystem& system, std::span<const double> targets,
                  std::span<const double> lambda) {
  CompensatedSum value;
  for (std::size_t c = 0; c < system.size(); ++c) {
    value.add(lambda[c] * targets[c]);
    for (auto k : system.constraint(c).members) value.add(-log_partition(logits[k], lambda[c]));
  }
  return value.value();
}

std::vector<double> dual_gradient(std::span<const double> logits, const ConstraintSystem& system,
                                  std::span<const double> targets, std::span<const double> lambda) {
  std::vector<double> g(system.size());
  for (std::size_t c = 0; c < system.size(); ++c)
    g[c] = targets[c] - member_stats(logits, system.constraint(c).members, lambda[c]).mass;
  return g;
}

Projection evaluate_projection(std::span<const double> logits, const ConstraintSystem& system,
                               std::span<const double> targets, std::vector<double> lambda) {
  Projection out;
  out.projected.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out.projected[k] = sigmoid(logits[k]);
  CompensatedSum kl;
  CompensatedSum dual;
  for (std::size_t c = 0; c < system.size(); ++c) {
    const double lam = lambda[c];
    CompensatedSum mass;
    dual.add(lam * targets[c]);
    for (auto k : system.constraint(c).members) {
      const double q = sigmoid(logits[k] + lam);
      const double log_z = log_partition(logits[k], lam);
      out.projected[k] = q;
      mass.add(q);
      // KL(Bern(q) || Bern(h)) = q lambda - log Z
      kl.add(q * lam - log_z);
      dual.add(-log_z);
    }
    out.dual_residual = std::max(out.dual_residual, std::abs(targets[c] - mass.value()));
  }
  out.kl = std::max(0.0, kl.value());
  out.dual = dual.value();
  out.lambda = std::move(lambda);
  return out;
}

Projection project(std::span<const double> logits, const ConstraintSystem& system, std::span<const double> targets,
                   std::span<const double> warm_start, const ProjectionOptions& options) {
  if (logits.size() != system.universe_size()) throw InputError("logit count does not match the pair universe");
  check_targets(system, targets);
  const std::size_t nc = system.size();

  // Members and targets the multipliers are solved on.
  std::vector<std::vector<std::size_t>> sampled;
  std::vector<double> solve_targets(targets.begin(), targets.end());
  std::vector<std::span<const std::size_t>> members(nc);
  if (options.subsample < 1.0) {
    if (!(options.subsample > 0.0)) throw InputError("subsample fraction must lie in (0, 1]");
    std::mt19937_64 rng(options.subsample_seed);
    sampled.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& all = system.constraint(c).members;
      const auto take = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(options.subsample * static_cast<double>(all.size()))));
      std::vector<std::size_t> pool(all.begin(), all.end());
      for (std::size_t k = 0; k < take; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
        std::swap(pool[k], pool[pick(rng)]);
      }
      pool.resize(take);
      std::sort(pool.begin(), pool.end());
      solve_targets[c] *= static_cast<double>(take) / static_cast<double>(all.size());
      sampled[c] = std::move(pool);
      members[c] = sampled[c];
    }
  } else {
    for (std::size_t c = 0; c < nc; ++c) members[c] = system.constraint(c).members;
  }

  std::vector<double> lambda(nc, 0.0);
  if (warm_start.size() == nc) std::copy(warm_start.begin(), warm_start.end(), lambda.begin());

  struct State {
    double grad = 0.0;
    double curvature = 0.0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
  };
  std::vector<State> state(nc);
  auto residual = [&] {
    double r = 0.0;
    for (const auto& s : state) r = std::max(r, std::abs(s.grad));
    return r;
  };
  for (std::size_t c = 0; c < nc; ++c) {
    const auto st = member_stats(logits, members[c], lambda[c]);
    state[c].grad = solve_targets[c] - st.mass;
    state[c].curvature = st.variance;
  }

  int iter = 0;
  double res = residual();
  while (res > options.tol) {
    if (iter >= options.max_iters) {
      std::ostringstream msg;
      msg << "I-projection did not converge in " << options.max_iters << " iterations (residual " << res << ")";
      throw NumericalError(msg.str());
    }
    ++iter;
    for (std::size_t c = 0; c < nc; ++c) {
      auto& s = state[c];
      if (std::abs(s.grad) <= options.tol) continue;
      // The dual gradient is decreasing in lambda_c: its root lies above
      // lambda_c when the gradient is positive.
      if (s.grad > 0.0)
        s.lo = std::max(s.lo, lambda[c]);
      else
        s.hi = std::min(s.hi, lambda[c]);
      double step = s.curvature > 0.0 ? s.grad / s.curvature : std::copysign(kMaxNewtonStep, s.grad);
      step = std::clamp(step, -kMaxNewtonStep, kMaxNewtonStep);

      // Backtrack until the residual shrinks, tightening the bracket with
      // every rejected trial point.
      bool accepted = false;
      double t = 1.0;
      for (int k = 0; k < 60 && !accepted; ++k, t *= 0.5) {
        const double cand = lambda[c] + t * step;
        if (cand <= s.lo || cand >= s.hi) continue;
        const auto st = member_stats(logits, members[c], cand);
        const double g = solve_targets[c] - st.mass;
        if (std::abs(g) < std::abs(s.grad)) {
          lambda[c] = cand;
          s.grad = g;
          s.curvature = st.variance;
          accepted = true;
        } else if (g > 0.0) {
          s.lo = std::max(s.lo, cand);
        } else {
          s.hi = std::min(s.hi, cand);
        }
      }
      if (!accepted) {
        const double cand = (std::isfinite(s.lo) && std::isfinite(s.hi)) ? 0.5 * (s.lo + s.hi) : lambda[c] + t * step;
        const auto st = member_stats(logits, members[c], cand);
        lambda[c] = cand;
        s.grad = solve_targets[c] - st.mass;
        s.curvature = st.variance;
      }
    }
    res = residual();
    if (options.on_iteration) {
      double dual = 0.0;
      for (std::size_t c = 0; c < nc; ++c) {
        dual += lambda[c] * solve_targets[c];
        for (auto k : members[c]) dual -= log_partition(logits[k], lambda[c]);
      }
      options.on_iteration(iter, dual, res);
    }
  }

  Projection out = evaluate_projection(logits, system, targets, std::move(lambda));
  out.iterations = iter;
  out.converged = options.subsample < 1.0 ? true : out.dual_residual <= options.tol;
  return out;
}

Projection project(const DyadicModel& model, const PairUniverse& universe, const ConstraintSystem& system,
                   std::span<const double> targets, std::span<const double> warm_start,
                   const ProjectionOptions& options) {
  const auto logits = model.logits(universe.pairs());
  return project(logits, system, targets, warm_start, options);
}

std::vector<double> fairness_grad_logits(const Projection& projection, std::span<const double> logits,
                                         const ConstraintSystem& system) {
  if (!projection.converged)
    throw NumericalError("fairness gradient needs a converged projection (residual " +
                         std::to_string(projection.dual_residual) + ")");
  std::vector<double> w(logits.size(), 0.0);
  for (std::size_t c = 0; c < system.size(); ++c)
    for (auto k : system.constraint(c).members) w[k] = sigmoid(logits[k]) - projection.projected[k];
  return w;
}

std::vector<double> target_grad_logits(const Projection& projection, std::span<const double> logits,
                                       const ConstraintSystem& system) {
  std::vector<double> w(logits.size(), 0.0);
  if (system.target_rule() != TargetRule::mean_over_support || system.size() == 0) return w;
  double dlf_dd = 0.0;
  for (std::size_t c = 0; c < system.size(); ++c)
    dlf_dd += projection.lambda[c] * static_cast<double>(system.constraint(c).members.size());
  const double scale = dlf_dd / static_cast<double>(system.support_size());
  for (const auto& con : system.constraints()) {
    for (auto k : con.members) {
      const double p = sigmoid(logits[k]);
      w[k] = scale * p * (1.0 - p);
    }
  }
  return w;
}

}  // namespace fairlp
