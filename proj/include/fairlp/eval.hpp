#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairlp/graph.hpp"
#include "fairlp/models.hpp"
#include "json.hpp"

namespace fairlp {

/// P(pos > neg) + 0.5 P(pos == neg), via midranks. Throws InputError when
/// either list is empty.
double auc(std::span<const double> pos, std::span<const double> neg);

struct BlockRow {
  GroupPair block;
  std::size_t pairs = 0;
  double value = 0.0;  // weighted mean score (DP, EO) or folded AUC (RDP)
};

/// A maximum over per-block statistics plus the table behind it.
struct BlockMeasure {
  double value = 0.0;
  std::vector<BlockRow> rows;         // populated blocks, ascending
  std::vector<GroupPair> excluded;    // blocks of `all_blocks` with no test pair
};

/// (N_neg_full / N_pos_full) * (N_pos_test / N_neg_test).
double negative_weight(std::size_t full_pos, std::size_t full_neg, std::size_t test_pos, std::size_t test_neg);

/// max - min over populated blocks of the weighted block mean score, where
/// negatives (label 0) carry `neg_weight` and positives weight 1.
/// Throws InputError with fewer than two populated blocks.
BlockMeasure dp_measure(std::span<const double> scores, std::span<const GroupPair> blocks,
                        std::span<const std::uint8_t> labels, double neg_weight,
                        std::span<const GroupPair> all_blocks = {});

/// max - min over blocks of the mean positive score. With a threshold the
/// per-block rate is the share of positives scoring >= threshold instead.
BlockMeasure eo_measure(std::span<const double> pos_scores, std::span<const GroupPair> blocks,
                        std::optional<double> threshold = std::nullopt, std::span<const GroupPair> all_blocks = {});

/// max over blocks of max(a, 1 - a), a = AUC of the block's scores against
/// every other block's scores.
BlockMeasure rdp_measure(std::span<const double> scores, std::span<const GroupPair> blocks,
                         std::span<const GroupPair> all_blocks = {});

struct RbRow {
  GroupId group = 0;
  double regularization = 0.0;  // selected C
  double validation_auc = 0.0;
  double test_auc = 0.0;        // folded
};

struct RbResult {
  double value = 0.5;
  std::vector<RbRow> rows;
  std::vector<std::string> skipped;
};

/// One-vs-rest L2 logistic regression per sensitive value on a stratified
/// 60/20/20 node split. C is picked from 10^-4 .. 10^4 by validation AUC
/// (ties keep the smaller C); the result is the max folded test AUC.
/// Nodes with eligible[i] == 0 are left out; empty means all nodes.
RbResult rb_measure(const EmbeddingView& embeddings, const SensitivePartition& partition, std::uint64_t seed,
                    std::span<const std::uint8_t> eligible = {});

/// Binary logistic regression minimising C sum logloss + |w|^2 / 2 (the
/// intercept is unpenalised). Returns weights followed by the intercept.
std::vector<double> fit_logistic(std::span<const double> features, std::size_t rows, std::size_t cols,
                                 std::span<const std::uint8_t> labels, double c);

struct EvalOptions {
  std::optional<double> eo_threshold;
  bool compute_rb = true;
};

struct EvalReport {
  double auc = 0.0;
  BlockMeasure dp;
  BlockMeasure eo;
  BlockMeasure rdp;
  std::optional<RbResult> rb;  // absent for models without embeddings
  double negative_weight = 1.0;
  std::size_t test_pos = 0;
  std::size_t test_neg = 0;

  nlohmann::json to_json(const SensitivePartition* partition = nullptr) const;
};

/// Number of structurally possible pairs of `graph`.
std::size_t candidate_pair_count(const Graph& graph);

/// Scores the held-out pairs of `split` with `model`. `full` is the graph
/// before splitting and fixes the negative reweighting.
EvalReport evaluate(const DyadicModel& model, const Graph& full, const DataSplit& split,
                    const SensitivePartition& partition, std::uint64_t seed, const EvalOptions& options = {});

}  // namespace fairlp
