#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fairlp {

using NodeId = std::uint32_t;
using GroupId = std::uint32_t;

/// Unordered vertex pair stored with u < v.
struct NodePair {
  NodeId u = 0;
  NodeId v = 0;

  static NodePair make(NodeId a, NodeId b) { return a < b ? NodePair{a, b} : NodePair{b, a}; }
  auto operator<=>(const NodePair&) const = default;
};

/// Simple undirected graph, optionally bipartite. Immutable after construction.
class Graph {
 public:
  Graph() = default;

  /// Throws InputError on self-loops, duplicate edges, out-of-range ids or
  /// edges inside one side of a bipartite split.
  Graph(std::size_t num_nodes, std::vector<NodePair> edges,
        std::optional<std::vector<std::uint8_t>> sides = std::nullopt);

  std::size_t num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::span<const NodePair> edges() const { return edges_; }
  std::size_t degree(NodeId i) const { return degree_[i]; }

  bool has_edge(NodeId a, NodeId b) const;

  bool is_bipartite() const { return sides_.has_value(); }
  std::uint8_t side(NodeId i) const { return sides_ ? (*sides_)[i] : 0; }
  const std::optional<std::vector<std::uint8_t>>& sides() const { return sides_; }

  /// True when {a, b} is a structurally possible edge.
  bool allowed(NodeId a, NodeId b) const { return a != b && (!sides_ || (*sides_)[a] != (*sides_)[b]); }

  /// Number of nodes i could possibly be linked to.
  std::size_t candidate_partners(NodeId i) const;

  /// Same node set and bipartite split, different edges.
  Graph with_edges(std::vector<NodePair> edges) const { return Graph(n_, std::move(edges), sides_); }

 private:
  std::size_t n_ = 0;
  std::vector<NodePair> edges_;  // sorted
  std::vector<std::size_t> degree_;
  std::optional<std::vector<std::uint8_t>> sides_;
  std::size_t side_count_[2] = {0, 0};
};

/// Assignment of every node to exactly one sensitive group.
class SensitivePartition {
 public:
  SensitivePartition() = default;

  /// Group ids must be dense in [0, num_groups) with no empty group.
  explicit SensitivePartition(std::vector<GroupId> group_of, std::vector<std::string> labels = {});

  std::size_t num_nodes() const { return group_of_.size(); }
  std::size_t num_groups() const { return members_.size(); }
  GroupId group_of(NodeId i) const { return group_of_[i]; }
  std::span<const GroupId> assignment() const { return group_of_; }
  std::span<const NodeId> members(GroupId s) const { return members_[s]; }
  const std::string& label(GroupId s) const { return labels_[s]; }

 private:
  std::vector<GroupId> group_of_;
  std::vector<std::vector<NodeId>> members_;
  std::vector<std::string> labels_;
};

/// Unordered group pair with s <= t.
struct GroupPair {
  GroupId s = 0;
  GroupId t = 0;

  static GroupPair make(GroupId a, GroupId b) { return a <= b ? GroupPair{a, b} : GroupPair{b, a}; }
  auto operator<=>(const GroupPair&) const = default;
};

/// All candidate vertex pairs U, indexed by their sensitive block U_st.
/// Blocks are every unordered (s, t), s <= t, in lexicographic order; some
/// may be empty (e.g. same-side blocks of a bipartite graph).
class PairUniverse {
 public:
  PairUniverse() = default;
  PairUniverse(std::size_t num_groups, std::vector<NodePair> pairs, std::vector<std::uint32_t> block_of);

  std::size_t size() const { return pairs_.size(); }
  std::span<const NodePair> pairs() const { return pairs_; }
  const NodePair& pair(std::size_t k) const { return pairs_[k]; }
  std::uint32_t block_of(std::size_t k) const { return block_of_[k]; }
  std::span<const std::uint32_t> block_index() const { return block_of_; }

  std::size_t num_groups() const { return num_groups_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  std::span<const GroupPair> blocks() const { return blocks_; }
  std::span<const std::size_t> block_sizes() const { return block_sizes_; }
  std::uint32_t block_id(GroupPair st) const;

  /// Index of {a, b} in pairs(), or nullopt when it is not a candidate pair.
  std::optional<std::size_t> find(NodePair p) const;

 private:
  std::size_t num_groups_ = 0;
  std::vector<NodePair> pairs_;  // sorted
  std::vector<std::uint32_t> block_of_;
  std::vector<GroupPair> blocks_;
  std::vector<std::size_t> block_sizes_;
};

PairUniverse enumerate_pairs(const Graph& graph, const SensitivePartition& partition);

/// Per-pair edge indicators of `graph` over the universe.
std::vector<std::uint8_t> edge_labels(const Graph& graph, const PairUniverse& universe);

struct LoadedGraph {
  Graph graph;
  SensitivePartition partition;
  std::vector<std::string> node_names;  // dense index -> id used in the files
  std::size_t duplicates_dropped = 0;
  std::size_t self_loops_dropped = 0;
};

/// Reads a whitespace separated "u v" edge list and a "node_id,group_label"
/// CSV. Nodes are indexed in attribute-file order; group ids in first-seen
/// label order. For bipartite graphs the first column of the edge list is
/// side 0 and the second column side 1.
LoadedGraph load_edge_list(const std::filesystem::path& edge_path, const std::filesystem::path& attr_path,
                           bool bipartite);

void write_edge_list(const std::filesystem::path& path, const Graph& graph,
                     std::span<const std::string> node_names = {});
void write_attributes(const std::filesystem::path& path, const SensitivePartition& partition,
                      std::span<const std::string> node_names = {});

struct DataSplit {
  Graph train;
  std::vector<NodePair> test_pos;
  std::vector<NodePair> test_neg;
  std::uint64_t seed = 0;
};

/// Holds out floor(test_frac * |E|) edges, never leaving a test node without
/// a train edge, and samples as many non-edges between train-covered nodes.
DataSplit split(const Graph& graph, double test_frac, std::uint64_t seed);

}  // namespace fairlp
