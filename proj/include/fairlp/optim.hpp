#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fairlp {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First-order update rule with its per-parameter state.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::size_t dim, double learning_rate, AdamSettings adam = {});

  /// params -= update(grad). Throws NumericalError on a non-finite gradient,
  /// leaving params untouched.
  void step(std::span<double> params, std::span<const double> grad);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  long steps_taken() const { return t_; }

 private:
  OptimizerKind kind_;
  double lr_;
  AdamSettings adam_;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Objective for minimize_lbfgs: returns f(x) and writes grad f(x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  int max_iters = 100;
  int history = 10;
  /// Stop when max_k |grad_k| <= grad_tol.
  double grad_tol = 1e-8;
};

struct LbfgsResult {
  int iterations = 0;
  double value = 0.0;
  double grad_max = 0.0;
  bool converged = false;
};

/// Limited-memory BFGS with backtracking Armijo line search.
LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double>& x, const LbfgsOptions& options = {});

}  // namespace fairlp
