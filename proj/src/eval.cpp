#include "fairlp/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "fairlp/error.hpp"
#include "fairlp/numeric.hpp"
#include "fairlp/optim.hpp"

namespace fairlp {

double auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw InputError("AUC needs at least one positive and one negative score");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(pos.size() + neg.size());
  for (double s : pos) items.push_back({s, true});
  for (double s : neg) items.push_back({s, false});
  for (const auto& it : items)
    if (std::isnan(it.score)) throw InputError("AUC received a NaN score");
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

  // Twice the Mann-Whitney U: integer-valued, so exact in double.
  double twice_u = 0.0;
  std::size_t neg_below = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    std::size_t tie_pos = 0;
    std::size_t tie_neg = 0;
    while (j < items.size() && items[j].score == items[i].score) {
      (items[j].positive ? tie_pos : tie_neg) += 1;
      ++j;
    }
    twice_u += static_cast<double>(tie_pos) * static_cast<double>(2 * neg_below + tie_neg);
    neg_below += tie_neg;
    i = j;
  }
  return twice_u / (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double negative_weight(std::size_t full_pos, std::size_t full_neg, std::size_t test_pos, std::size_t test_neg) {
  if (full_pos == 0 || test_neg == 0) throw InputError("negative reweighting needs edges and test negatives");
  return (static_cast<double>(full_neg) / static_cast<double>(full_pos)) *
         (static_cast<double>(test_pos) / static_cast<double>(test_neg));
}

namespace {

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw InputError("scores and block labels differ in length");
}

std::vector<GroupPair> excluded_blocks(std::span<const GroupPair> all_blocks, const std::vector<BlockRow>& rows) {
  std::vector<GroupPair> out;
  for (const auto& b : all_blocks)
    if (std::none_of(rows.begin(), rows.end(), [&](const BlockRow& r) { return r.block == b; })) out.push_back(b);
  return out;
}

BlockMeasure spread(std::vector<BlockRow> rows, std::span<const GroupPair> all_blocks, const char* what) {
  if (rows.size() < 2)
    throw InputError(std::string(what) + " needs test pairs in at least two group blocks, found " +
                     std::to_string(rows.size()));
  const auto [lo, hi] =
      std::minmax_element(rows.begin(), rows.end(), [](const BlockRow& a, const BlockRow& b) { return a.value < b.value; });
  BlockMeasure m;
  m.value = hi->value - lo->value;
  m.excluded = excluded_blocks(all_blocks, rows);
  m.rows = std::move(rows);
  return m;
}

}  // namespace

BlockMeasure dp_measure(std::span<const double> scores, std::span<const GroupPair> blocks,
                        std::span<const std::uint8_t> labels, double neg_weight, std::span<const GroupPair> all_blocks) {
  check_sizes(scores.size(), blocks.size());
  check_sizes(scores.size(), labels.size());
  struct Acc {
    CompensatedSum weighted;
    CompensatedSum weight;
    std::size_t n = 0;
  };
  std::map<GroupPair, Acc> acc;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double w = labels[k] ? 1.0 : neg_weight;
    auto& a = acc[blocks[k]];
    a.weighted.add(w * scores[k]);
    a.weight.add(w);
    ++a.n;
  }
  std::vector<BlockRow> rows;
  for (const auto& [b, a] : acc) rows.push_back({b, a.n, a.weighted.value() / a.weight.value()});
  return spread(std::move(rows), all_blocks, "DP");
}

BlockMeasure eo_measure(std::span<const double> pos_scores, std::span<const GroupPair> blocks,
                        std::optional<double> threshold, std::span<const GroupPair> all_blocks) {
  check_sizes(pos_scores.size(), blocks.size());
  std::map<GroupPair, std::pair<CompensatedSum, std::size_t>> acc;
  for (std::size_t k = 0; k < pos_scores.size(); ++k) {
    const double v = threshold ? (pos_scores[k] >= *threshold ? 1.0 : 0.0) : pos_scores[k];
    auto& a = acc[blocks[k]];
    a.first.add(v);
    ++a.second;
  }
  std::vector<BlockRow> rows;
  for (const auto& [b, a] : acc) rows.push_back({b, a.second, a.first.value() / static_cast<double>(a.second)});
  return spread(std::move(rows), all_blocks, "EO");
}

BlockMeasure rdp_measure(std::span<const double> scores, std::span<const GroupPair> blocks,
                         std::span<const GroupPair> all_blocks) {
  check_sizes(scores.size(), blocks.size());
  std::map<GroupPair, std::vector<double>> by_block;
  for (std::size_t k = 0; k < scores.size(); ++k) by_block[blocks[k]].push_back(scores[k]);
  if (by_block.size() < 2)
    throw InputError("RDP needs test pairs in at least two group blocks, found " + std::to_string(by_block.size()));
  std::vector<BlockRow> rows;
  std::vector<double> rest;
  for (const auto& [b, mine] : by_block) {
    rest.clear();
    for (const auto& [other, theirs] : by_block)
      if (other != b) rest.insert(rest.end(), theirs.begin(), theirs.end());
    const double a = auc(mine, rest);
    rows.push_back({b, mine.size(), std::max(a, 1.0 - a)});
  }
  BlockMeasure m;
  m.value = std::max_element(rows.begin(), rows.end(), [](const BlockRow& x, const BlockRow& y) {
              return x.value < y.value;
            })->value;
  m.excluded = excluded_blocks(all_blocks, rows);
  m.rows = std::move(rows);
  return m;
}

std::vector<double> fit_logistic(std::span<const double> features, std::size_t rows, std::size_t cols,
                                 std::span<const std::uint8_t> labels, double c) {
  if (features.size() != rows * cols || labels.size() != rows) throw InputError("logistic regression shape mismatch");
  std::vector<double> theta(cols + 1, 0.0);
  Objective f = [&](std::span<const double> w, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double value = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      value += 0.5 * w[j] * w[j];
      grad[j] = w[j];
    }
    for (std::size_t i = 0; i < rows; ++i) {
      const auto x = features.subspan(i * cols, cols);
      double z = w[cols];
      for (std::size_t j = 0; j < cols; ++j) z += w[j] * x[j];
      // logloss = softplus(z) - y z
      value += c * (softplus(z) - (labels[i] ? z : 0.0));
      const double r = c * (sigmoid(z) - labels[i]);
      for (std::size_t j = 0; j < cols; ++j) grad[j] += r * x[j];
      grad[cols] += r;
    }
    return value;
  };
  LbfgsOptions opts;
  opts.max_iters = 500;
  opts.grad_tol = 1e-6 * std::max(1.0, c);
  minimize_lbfgs(f, theta, opts);
  return theta;
}

RbResult rb_measure(const EmbeddingView& embeddings, const SensitivePartition& partition, std::uint64_t seed,
                    std::span<const std::uint8_t> eligible) {
  const std::size_t n = embeddings.rows;
  const std::size_t d = embeddings.cols;
  if (partition.num_nodes() != n) throw InputError("embedding rows do not match the partition");
  if (!eligible.empty() && eligible.size() != n) throw InputError("eligibility mask does not match the node count");
  RbResult result;
  std::vector<std::vector<NodeId>> nodes_of(partition.num_groups());
  for (NodeId i = 0; i < n; ++i)
    if (eligible.empty() || eligible[i]) nodes_of[partition.group_of(i)].push_back(i);
  std::size_t populated = 0;
  for (const auto& v : nodes_of) populated += !v.empty();
  if (populated < 2) {
    result.skipped.push_back("fewer than two sensitive values among eligible nodes");
    return result;
  }

  // Stratified 60/20/20 node split.
  enum Part : std::uint8_t { train_part, val_part, test_part, unused_part };
  std::vector<std::uint8_t> part(n, unused_part);
  std::mt19937_64 rng(seed);
  for (GroupId s = 0; s < partition.num_groups(); ++s) {
    std::vector<NodeId> nodes = nodes_of[s];
    if (nodes.empty()) continue;
    if (nodes.size() < 3) {
      result.skipped.push_back("group '" + partition.label(s) + "' has " + std::to_string(nodes.size()) +
                               " nodes (< 3)");
      continue;
    }
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const std::size_t m = nodes.size();
    const std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.6 * m)));
    const std::size_t n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(0.2 * m)), 1, m - n_train - 1);
    for (std::size_t k = 0; k < m; ++k) part[nodes[k]] = k < n_train ? train_part : k < n_train + n_val ? val_part : test_part;
  }

  // Standardise with train statistics; constant columns become zero.
  std::vector<double> mean(d, 0.0);
  std::vector<double> scale(d, 0.0);
  std::size_t n_train = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (part[i] != train_part) continue;
    ++n_train;
    for (std::size_t j = 0; j < d; ++j) mean[j] += embeddings.row(i)[j];
  }
  if (n_train == 0) return result;
  for (auto& v : mean) v /= static_cast<double>(n_train);
  for (std::size_t i = 0; i < n; ++i) {
    if (part[i] != train_part) continue;
    for (std::size_t j = 0; j < d; ++j) scale[j] += std::pow(embeddings.row(i)[j] - mean[j], 2);
  }
  for (auto& v : scale) {
    const double sd = std::sqrt(v / static_cast<double>(n_train));
    v = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  auto gather = [&](Part p, std::vector<double>& x, std::vector<NodeId>& ids) {
    for (std::size_t i = 0; i < n; ++i) {
      if (part[i] != p) continue;
      ids.push_back(static_cast<NodeId>(i));
      for (std::size_t j = 0; j < d; ++j) x.push_back((embeddings.row(i)[j] - mean[j]) * scale[j]);
    }
  };
  std::vector<double> x_train, x_val, x_test;
  std::vector<NodeId> id_train, id_val, id_test;
  gather(train_part, x_train, id_train);
  gather(val_part, x_val, id_val);
  gather(test_part, x_test, id_test);

  auto scores = [&](const std::vector<double>& theta, const std::vector<double>& x, std::size_t rows) {
    std::vector<double> out(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      double z = theta[d];
      for (std::size_t j = 0; j < d; ++j) z += theta[j] * x[i * d + j];
      out[i] = z;
    }
    return out;
  };
  auto split_auc = [&](const std::vector<double>& s, const std::vector<NodeId>& ids, GroupId g) {
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < ids.size(); ++i) (partition.group_of(ids[i]) == g ? pos : neg).push_back(s[i]);
    return auc(pos, neg);
  };

  bool any = false;
  for (GroupId g = 0; g < partition.num_groups(); ++g) {
    if (nodes_of[g].size() < 3) continue;
    std::vector<std::uint8_t> y(id_train.size());
    for (std::size_t i = 0; i < id_train.size(); ++i) y[i] = partition.group_of(id_train[i]) == g;
    RbRow row;
    row.group = g;
    row.validation_auc = -1.0;
    std::vector<double> best;
    for (int k = -4; k <= 4; ++k) {
      const double c = std::pow(10.0, k);
      auto theta = fit_logistic(x_train, id_train.size(), d, y, c);
      const double v = split_auc(scores(theta, x_val, id_val.size()), id_val, g);
      if (v > row.validation_auc) {
        row.validation_auc = v;
        row.regularization = c;
        best = std::move(theta);
      }
    }
    const double a = split_auc(scores(best, x_test, id_test.size()), id_test, g);
    row.test_auc = std::max(a, 1.0 - a);
    result.value = any ? std::max(result.value, row.test_auc) : row.test_auc;
    any = true;
    result.rows.push_back(row);
  }
  return result;
}

std::size_t candidate_pair_count(const Graph& graph) {
  const std::size_t n = graph.num_nodes();
  if (!graph.is_bipartite()) return n * (n - 1) / 2;
  std::size_t side1 = 0;
  for (std::size_t i = 0; i < n; ++i) side1 += graph.side(static_cast<NodeId>(i));
  return (n - side1) * side1;
}

EvalReport evaluate(const DyadicModel& model, const Graph& full, const DataSplit& split,
                    const SensitivePartition& partition, std::uint64_t seed, const EvalOptions& options) {
  EvalReport r;
  r.test_pos = split.test_pos.size();
  r.test_neg = split.test_neg.size();
  std::vector<double> pos, neg, all;
  std::vector<GroupPair> pos_blocks, all_blocks_of;
  std::vector<std::uint8_t> labels;
  auto block = [&](NodePair p) { return GroupPair::make(partition.group_of(p.u), partition.group_of(p.v)); };
  for (const auto& p : split.test_pos) {
    pos.push_back(model.probability(p));
    pos_blocks.push_back(block(p));
    all.push_back(pos.back());
    all_blocks_of.push_back(pos_blocks.back());
    labels.push_back(1);
  }
  for (const auto& p : split.test_neg) {
    neg.push_back(model.probability(p));
    all.push_back(neg.back());
    all_blocks_of.push_back(block(p));
    labels.push_back(0);
  }

  // Every block that can hold a candidate pair.
  std::vector<GroupPair> possible;
  const std::size_t g = partition.num_groups();
  std::vector<std::array<std::size_t, 2>> side_count(g, {0, 0});
  for (std::size_t i = 0; i < full.num_nodes(); ++i)
    side_count[partition.group_of(static_cast<NodeId>(i))][full.side(static_cast<NodeId>(i))] += 1;
  for (GroupId s = 0; s < g; ++s) {
    for (GroupId t = s; t < g; ++t) {
      std::size_t count = 0;
      if (full.is_bipartite()) {
        count = side_count[s][0] * side_count[t][1] + side_count[s][1] * side_count[t][0];
        if (s == t) count /= 2;
      } else {
        const std::size_t a = side_count[s][0];
        count = s == t ? a * (a - 1) / 2 : a * side_count[t][0];
      }
      if (count > 0) possible.push_back({s, t});
    }
  }

  r.auc = auc(pos, neg);
  r.negative_weight = negative_weight(full.num_edges(), candidate_pair_count(full) - full.num_edges(), r.test_pos,
                                      r.test_neg);
  r.dp = dp_measure(all, all_blocks_of, labels, r.negative_weight, possible);
  r.eo = eo_measure(pos, pos_blocks, options.eo_threshold, possible);
  r.rdp = rdp_measure(all, all_blocks_of, possible);
  if (options.compute_rb) {
    if (auto emb = model.embeddings()) {
      // A bipartite side carrying a single group (e.g. items) has no
      // attribute to predict.
      std::vector<std::uint8_t> eligible(full.num_nodes(), 1);
      if (full.is_bipartite()) {
        for (std::uint8_t side = 0; side < 2; ++side) {
          std::set<GroupId> groups;
          for (NodeId i = 0; i < full.num_nodes(); ++i)
            if (full.side(i) == side) groups.insert(partition.group_of(i));
          if (groups.size() == 1)
            for (NodeId i = 0; i < full.num_nodes(); ++i)
              if (full.side(i) == side) eligible[i] = 0;
        }
      }
      r.rb = rb_measure(*emb, partition, seed, eligible);
    }
  }
  return r;
}

namespace {

nlohmann::json measure_json(const BlockMeasure& m, const SensitivePartition* partition) {
  auto label = [&](GroupId s) { return partition ? partition->label(s) : std::to_string(s); };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : m.rows)
    rows.push_back({{"block", {label(r.block.s), label(r.block.t)}}, {"pairs", r.pairs}, {"value", r.value}});
  nlohmann::json excluded = nlohmann::json::array();
  for (const auto& b : m.excluded) excluded.push_back({label(b.s), label(b.t)});
  return {{"value", m.value}, {"blocks", rows}, {"excluded", excluded}};
}

}  // namespace

nlohmann::json EvalReport::to_json(const SensitivePartition* partition) const {
  nlohmann::json j = {{"auc", auc},
                      {"dp", measure_json(dp, partition)},
                      {"eo", measure_json(eo, partition)},
                      {"rdp", measure_json(rdp, partition)},
                      {"negative_weight", negative_weight},
                      {"test_pos", test_pos},
                      {"test_neg", test_neg}};
  if (rb) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rb->rows)
      rows.push_back({{"group", partition ? partition->label(r.group) : std::to_string(r.group)},
                      {"C", r.regularization},
                      {"validation_auc", r.validation_auc},
                      {"test_auc", r.test_auc}});
    j["rb"] = {{"value", rb->value}, {"groups", rows}, {"skipped", rb->skipped}};
  } else {
    j["rb"] = nullptr;
  }
  return j;
}

}  // namespace fairlp
