#pragma once

#include <cmath>
#include <span>

namespace fairlp {

/// Marginal probabilities are kept inside [kProbFloor, 1 - kProbFloor].
inline constexpr double kProbFloor = 1e-7;

/// Logit of 1 - kProbFloor; clamping logits to +-kMaxLogit is the same as
/// clamping probabilities to [kProbFloor, 1 - kProbFloor].
inline const double kMaxLogit = std::log((1.0 - kProbFloor) / kProbFloor);

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double log_sigmoid(double x) { return -softplus(-x); }

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double clamp_logit(double x) {
  if (x > kMaxLogit) return kMaxLogit;
  if (x < -kMaxLogit) return -kMaxLogit;
  return x;
}

inline bool logit_is_clamped(double raw) { return raw >= kMaxLogit || raw <= -kMaxLogit; }

/// KL(Bernoulli(q) || Bernoulli(p)) in nats.
inline double bernoulli_kl(double q, double p) {
  double kl = 0.0;
  if (q > 0.0) kl += q * std::log(q / p);
  if (q < 1.0) kl += (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
  return kl;
}

/// Neumaier-compensated sum. Block sums over ~10^6 pairs must stay accurate
/// well below the 1e-8 dual tolerance.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

}  // namespace fairlp
