#include "fairlp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fairlp/error.hpp"

namespace fairlp {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw InputError("unknown optimizer '" + name + "'");
}

Optimizer::Optimizer(OptimizerKind kind, std::size_t dim, double learning_rate, AdamSettings adam)
    : kind_(kind), lr_(learning_rate), adam_(adam) {
  if (kind_ == OptimizerKind::adam) {
    m_.assign(dim, 0.0);
    v_.assign(dim, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  for (std::size_t k = 0; k < grad.size(); ++k)
    if (!std::isfinite(grad[k])) throw NumericalError("non-finite gradient at parameter " + std::to_string(k));
  ++t_;
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= lr_ * grad[k];
    return;
  }
  const double c1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = adam_.beta1 * m_[k] + (1.0 - adam_.beta1) * grad[k];
    v_[k] = adam_.beta2 * v_[k] + (1.0 - adam_.beta2) * grad[k] * grad[k];
    params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + adam_.epsilon);
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double>& x, const LbfgsOptions& options) {
  const std::size_t n = x.size();
  std::vector<double> g(n), x_new(n), g_new(n), dir(n);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  LbfgsResult result;
  double fx = f(x, g);
  result.value = fx;
  result.grad_max = max_abs(g);
  if (!std::isfinite(fx)) throw NumericalError("L-BFGS objective is not finite at the starting point");

  while (result.grad_max > options.grad_tol && result.iterations < options.max_iters) {
    // Two-loop recursion for dir = -H g.
    for (std::size_t k = 0; k < n; ++k) dir[k] = -g[k];
    std::vector<double> alpha(s_hist.size());
    for (std::size_t m = s_hist.size(); m-- > 0;) {
      alpha[m] = rho_hist[m] * dot(s_hist[m], dir);
      for (std::size_t k = 0; k < n; ++k) dir[k] -= alpha[m] * y_hist[m][k];
    }
    if (!s_hist.empty()) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (auto& d : dir) d *= gamma;
    } else {
      // First step: unit-length in the max norm.
      const double scale = 1.0 / std::max(1.0, result.grad_max);
      for (auto& d : dir) d *= scale;
    }
    for (std::size_t m = 0; m < s_hist.size(); ++m) {
      const double beta = rho_hist[m] * dot(y_hist[m], dir);
      for (std::size_t k = 0; k < n; ++k) dir[k] += s_hist[m][k] * (alpha[m] - beta);
    }
    double slope = dot(g, dir);
    if (slope >= 0.0) {
      // Lost descent; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t k = 0; k < n; ++k) dir[k] = -g[k] / std::max(1.0, result.grad_max);
      slope = dot(g, dir);
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t k = 0; k < n; ++k) x_new[k] = x[k] + step * dir[k];
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++result.iterations;
    if (!accepted) break;

    std::vector<double> s(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = x_new[k] - x[k];
      y[k] = g_new[k] - g[k];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    result.value = fx;
    result.grad_max = max_abs(g);
  }
  result.converged = result.grad_max <= options.grad_tol;
  return result;
}

}  // namespace fairlp
