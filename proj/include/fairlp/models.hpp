#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairlp/graph.hpp"
#include "fairlp/numeric.hpp"
#include "fairlp/optim.hpp"
#include "json.hpp"

namespace fairlp {

enum class ModelKind { maxent, dot, cne };

std::string to_string(ModelKind kind);
ModelKind model_from_string(const std::string& name);

/// Row-major n x D view of node embeddings.
struct EmbeddingView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

/// A dyadic independence graph model: every pair {i, j} is an independent
/// Bernoulli variable with success probability sigmoid(logit_ij).
///
/// Logits are clamped to +-kMaxLogit, so probabilities stay inside
/// [kProbFloor, 1 - kProbFloor] and logit() == log p(1) - log p(0) exactly.
/// Gradients are those of the clamped logit (zero where the clamp is active).
class DyadicModel {
 public:
  virtual ~DyadicModel() = default;

  virtual ModelKind kind() const = 0;
  virtual std::size_t num_nodes() const = 0;

  /// Unclamped logit.
  virtual double raw_logit(NodePair p) const = 0;

  /// grad += weight * d raw_logit(p) / d theta.
  virtual void add_raw_logit_gradient(NodePair p, double weight, std::span<double> grad) const = 0;

  virtual std::span<double> parameters() = 0;
  virtual std::span<const double> parameters() const = 0;

  virtual std::optional<EmbeddingView> embeddings() const { return std::nullopt; }

  virtual nlohmann::json to_json() const = 0;
  virtual std::unique_ptr<DyadicModel> clone() const = 0;

  double logit(NodePair p) const { return clamp_logit(raw_logit(p)); }
  double probability(NodePair p) const { return sigmoid(logit(p)); }

  /// Clamped logits for every pair.
  std::vector<double> logits(std::span<const NodePair> pairs) const;

  /// grad += sum_k weights[k] * d logit(pairs[k]) / d theta. Throws
  /// NumericalError naming the first pair with a non-finite weight.
  void accumulate_gradient(std::span<const NodePair> pairs, std::span<const double> weights,
                           std::span<double> grad) const;
};

/// p_ij = sigmoid(alpha_i + alpha_j): the maximum entropy model with expected
/// degrees equal to observed degrees once fitted.
class MaxEntModel final : public DyadicModel {
 public:
  explicit MaxEntModel(std::vector<double> alpha) : alpha_(std::move(alpha)) {}

  ModelKind kind() const override { return ModelKind::maxent; }
  std::size_t num_nodes() const override { return alpha_.size(); }
  double raw_logit(NodePair p) const override { return alpha_[p.u] + alpha_[p.v]; }
  void add_raw_logit_gradient(NodePair p, double weight, std::span<double> grad) const override {
    grad[p.u] += weight;
    grad[p.v] += weight;
  }
  std::span<double> parameters() override { return alpha_; }
  std::span<const double> parameters() const override { return alpha_; }
  nlohmann::json to_json() const override;
  std::unique_ptr<DyadicModel> clone() const override { return std::make_unique<MaxEntModel>(*this); }

  std::span<const double> alpha() const { return alpha_; }

 private:
  std::vector<double> alpha_;
};

/// p_ij = sigmoid(x_i . x_j).
class DotProductModel final : public DyadicModel {
 public:
  /// Embeddings drawn i.i.d. N(0, 1/D).
  DotProductModel(std::size_t num_nodes, std::size_t dims, std::uint64_t seed);
  DotProductModel(std::size_t num_nodes, std::size_t dims, std::vector<double> embedding);

  ModelKind kind() const override { return ModelKind::dot; }
  std::size_t num_nodes() const override { return n_; }
  double raw_logit(NodePair p) const override;
  void add_raw_logit_gradient(NodePair p, double weight, std::span<double> grad) const override;
  std::span<double> parameters() override { return x_; }
  std::span<const double> parameters() const override { return x_; }
  std::optional<EmbeddingView> embeddings() const override { return EmbeddingView{x_, n_, dims_}; }
  nlohmann::json to_json() const override;
  std::unique_ptr<DyadicModel> clone() const override { return std::make_unique<DotProductModel>(*this); }

  std::size_t dims() const { return dims_; }

 private:
  std::size_t n_;
  std::size_t dims_;
  std::vector<double> x_;
};

/// Conditional network embedding: a MaxEnt prior P_ij combined with a
/// two-Gaussian likelihood on the embedding distance d_ij = |x_i - x_j|:
///
///   p_ij = P N(d; s1) / (P N(d; s1) + (1 - P) N(d; s2))
///   logit_ij = logit(P_ij) + log(s2 / s1) + d_ij^2 (1/(2 s2^2) - 1/(2 s1^2))
///
/// Only the embeddings are parameters; the prior is frozen.
class CneModel final : public DyadicModel {
 public:
  CneModel(const MaxEntModel& prior, std::size_t dims, double s1, double s2, std::uint64_t seed);
  CneModel(MaxEntModel prior, std::size_t dims, double s1, double s2, std::vector<double> embedding);

  ModelKind kind() const override { return ModelKind::cne; }
  std::size_t num_nodes() const override { return prior_.num_nodes(); }
  double raw_logit(NodePair p) const override;
  void add_raw_logit_gradient(NodePair p, double weight, std::span<double> grad) const override;
  std::span<double> parameters() override { return x_; }
  std::span<const double> parameters() const override { return x_; }
  std::optional<EmbeddingView> embeddings() const override { return EmbeddingView{x_, num_nodes(), dims_}; }
  nlohmann::json to_json() const override;
  std::unique_ptr<DyadicModel> clone() const override { return std::make_unique<CneModel>(*this); }

  const MaxEntModel& prior() const { return prior_; }
  std::size_t dims() const { return dims_; }
  double s1() const { return s1_; }
  double s2() const { return s2_; }

 private:
  double squared_distance(NodePair p) const;

  MaxEntModel prior_;
  std::size_t dims_;
  double s1_;
  double s2_;
  double offset_;    // log(s2 / s1)
  double quad_;      // 1/(2 s2^2) - 1/(2 s1^2)
  std::vector<double> x_;
};

std::unique_ptr<DyadicModel> model_from_json(const nlohmann::json& j);

struct MaxEntOptions {
  int max_iters = 100;
  /// Stop when every node's expected degree is within this of its degree.
  double degree_tol = 1e-7;
  /// |alpha_i| bound for nodes whose degree cannot be matched by a finite
  /// potential (degree 0 or linked to every candidate partner).
  double alpha_bound = 20.0;
};

struct MaxEntFit {
  MaxEntModel model;
  int iterations = 0;
  /// max_i |sum_j p_ij - deg(i)| over the universe.
  double max_degree_error = 0.0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Maximum likelihood over alpha (convex). Nodes sharing a degree (and
/// bipartite side) share a potential at the optimum, so L-BFGS runs over
/// one potential per degree class.
MaxEntFit fit_maxent(const Graph& graph, const PairUniverse& universe, const MaxEntOptions& options = {});

/// Expected degree of every node under the model, over the universe pairs.
std::vector<double> expected_degrees(const DyadicModel& model, const PairUniverse& universe);

/// -sum_U [a_ij log p_ij + (1 - a_ij) log(1 - p_ij)] with a_ij the edge
/// indicators of `graph`.
double model_cross_entropy(const DyadicModel& model, const Graph& graph, const PairUniverse& universe);
double cross_entropy(std::span<const double> logits, std::span<const std::uint8_t> labels);

/// Accumulates sum_k weights[k] d logit_k / d theta and applies one
/// optimizer update to the model parameters.
void gradient_step(DyadicModel& model, std::span<const NodePair> pairs, std::span<const double> logit_weights,
                   Optimizer& optimizer);

}  // namespace fairlp
