#include "fairlp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fairlp/error.hpp"

namespace fairlp {

namespace {

std::uint64_t pair_key(NodePair p) { return (static_cast<std::uint64_t>(p.u) << 32) | p.v; }

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string pair_str(NodePair p) { return "{" + std::to_string(p.u) + "," + std::to_string(p.v) + "}"; }

}  // namespace

Graph::Graph(std::size_t num_nodes, std::vector<NodePair> edges, std::optional<std::vector<std::uint8_t>> sides)
    : n_(num_nodes), edges_(std::move(edges)), degree_(num_nodes, 0), sides_(std::move(sides)) {
  if (n_ == 0) throw InputError("graph must have at least one node");
  if (sides_) {
    if (sides_->size() != n_) throw InputError("bipartite side vector has wrong length");
    for (auto s : *sides_) {
      if (s > 1) throw InputError("bipartite side must be 0 or 1");
      ++side_count_[s];
    }
  }
  for (auto& e : edges_) {
    if (e.u == e.v) throw InputError("self-loop on node " + std::to_string(e.u));
    if (e.u >= n_ || e.v >= n_) throw InputError("edge " + pair_str(e) + " references an unknown node");
    e = NodePair::make(e.u, e.v);
    if (!allowed(e.u, e.v)) throw InputError("edge " + pair_str(e) + " lies inside one bipartite side");
  }
  std::sort(edges_.begin(), edges_.end());
  if (auto dup = std::adjacent_find(edges_.begin(), edges_.end()); dup != edges_.end())
    throw InputError("duplicate edge " + pair_str(*dup));
  for (const auto& e : edges_) {
    ++degree_[e.u];
    ++degree_[e.v];
  }
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  if (a == b) return false;
  return std::binary_search(edges_.begin(), edges_.end(), NodePair::make(a, b));
}

std::size_t Graph::candidate_partners(NodeId i) const {
  if (sides_) return side_count_[1 - (*sides_)[i]];
  return n_ - 1;
}

SensitivePartition::SensitivePartition(std::vector<GroupId> group_of, std::vector<std::string> labels)
    : group_of_(std::move(group_of)), labels_(std::move(labels)) {
  GroupId max_group = 0;
  for (auto g : group_of_) max_group = std::max(max_group, g);
  const std::size_t num_groups = group_of_.empty() ? 0 : max_group + 1;
  members_.resize(num_groups);
  for (NodeId i = 0; i < group_of_.size(); ++i) members_[group_of_[i]].push_back(i);
  for (std::size_t s = 0; s < num_groups; ++s)
    if (members_[s].empty()) throw InputError("sensitive group " + std::to_string(s) + " has no members");
  if (labels_.empty()) {
    for (std::size_t s = 0; s < num_groups; ++s) labels_.push_back(std::to_string(s));
  } else if (labels_.size() != num_groups) {
    throw InputError("group label count does not match number of groups");
  }
}

PairUniverse::PairUniverse(std::size_t num_groups, std::vector<NodePair> pairs, std::vector<std::uint32_t> block_of)
    : num_groups_(num_groups), pairs_(std::move(pairs)), block_of_(std::move(block_of)) {
  for (GroupId s = 0; s < num_groups_; ++s)
    for (GroupId t = s; t < num_groups_; ++t) blocks_.push_back({s, t});
  block_sizes_.assign(blocks_.size(), 0);
  for (auto b : block_of_) ++block_sizes_[b];
}

std::uint32_t PairUniverse::block_id(GroupPair st) const {
  // Row s of the upper triangle starts after sum_{r<s} (G - r) entries.
  const std::size_t g = num_groups_;
  const std::size_t s = st.s;
  return static_cast<std::uint32_t>(s * g - s * (s - 1) / 2 + (st.t - st.s));
}

std::optional<std::size_t> PairUniverse::find(NodePair p) const {
  auto it = std::lower_bound(pairs_.begin(), pairs_.end(), p);
  if (it == pairs_.end() || *it != p) return std::nullopt;
  return static_cast<std::size_t>(it - pairs_.begin());
}

PairUniverse enumerate_pairs(const Graph& graph, const SensitivePartition& partition) {
  const std::size_t n = graph.num_nodes();
  if (partition.num_nodes() != n) throw InputError("partition and graph disagree on node count");
  const std::size_t g = partition.num_groups();
  std::vector<NodePair> pairs;
  std::vector<std::uint32_t> block_of;
  std::size_t expected = 0;
  if (graph.is_bipartite()) {
    std::size_t left = 0;
    for (NodeId i = 0; i < n; ++i) left += graph.side(static_cast<NodeId>(i)) == 0;
    expected = left * (n - left);
  } else {
    expected = n * (n - 1) / 2;
  }
  pairs.reserve(expected);
  block_of.reserve(expected);
  auto block_of_pair = [&](NodeId a, NodeId b) {
    const GroupPair st = GroupPair::make(partition.group_of(a), partition.group_of(b));
    const std::size_t s = st.s;
    return static_cast<std::uint32_t>(s * g - s * (s - 1) / 2 + (st.t - st.s));
  };
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (!graph.allowed(i, j)) continue;
      pairs.push_back({i, j});
      block_of.push_back(block_of_pair(i, j));
    }
  }
  return PairUniverse(g, std::move(pairs), std::move(block_of));
}

std::vector<std::uint8_t> edge_labels(const Graph& graph, const PairUniverse& universe) {
  std::vector<std::uint8_t> labels(universe.size(), 0);
  for (const auto& e : graph.edges()) {
    auto k = universe.find(e);
    if (!k) throw InputError("edge " + pair_str(e) + " is not a candidate pair of the universe");
    labels[*k] = 1;
  }
  return labels;
}

LoadedGraph load_edge_list(const std::filesystem::path& edge_path, const std::filesystem::path& attr_path,
                           bool bipartite) {
  std::ifstream attrs(attr_path);
  if (!attrs) throw InputError("cannot read attribute file " + attr_path.string());

  LoadedGraph out;
  std::unordered_map<std::string, NodeId> index;
  std::unordered_map<std::string, GroupId> group_index;
  std::vector<std::string> group_labels;
  std::vector<GroupId> group_of;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(attrs, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InputError(attr_path.string() + ":" + std::to_string(lineno) + ": expected node_id,group_label");
    std::string id = trim(line.substr(0, comma));
    std::string label = trim(line.substr(comma + 1));
    if (id.empty() || label.empty())
      throw InputError(attr_path.string() + ":" + std::to_string(lineno) + ": empty node id or label");
    if (index.contains(id)) throw InputError("node '" + id + "' listed twice in " + attr_path.string());
    auto [git, inserted] = group_index.try_emplace(label, static_cast<GroupId>(group_labels.size()));
    if (inserted) group_labels.push_back(label);
    index.emplace(id, static_cast<NodeId>(out.node_names.size()));
    out.node_names.push_back(std::move(id));
    group_of.push_back(git->second);
  }
  const std::size_t n = out.node_names.size();
  if (n == 0) throw InputError("attribute file " + attr_path.string() + " lists no nodes");

  std::ifstream edges_in(edge_path);
  if (!edges_in) throw InputError("cannot read edge file " + edge_path.string());

  std::vector<NodePair> edges;
  std::vector<int> side(n, -1);
  lineno = 0;
  while (std::getline(edges_in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string a, b;
    if (!(ss >> a)) continue;
    if (a[0] == '#') continue;
    if (!(ss >> b)) throw InputError(edge_path.string() + ":" + std::to_string(lineno) + ": expected 'u v'");
    auto ia = index.find(a);
    auto ib = index.find(b);
    if (ia == index.end()) throw InputError("node '" + a + "' has no sensitive attribute");
    if (ib == index.end()) throw InputError("node '" + b + "' has no sensitive attribute");
    if (ia->second == ib->second) {
      ++out.self_loops_dropped;
      continue;
    }
    if (bipartite) {
      for (auto [node, want] : {std::pair{ia->second, 0}, std::pair{ib->second, 1}}) {
        if (side[node] == -1) side[node] = want;
        if (side[node] != want)
          throw InputError("node '" + out.node_names[node] + "' appears on both sides of the bipartite graph");
      }
    }
    edges.push_back(NodePair::make(ia->second, ib->second));
  }
  std::sort(edges.begin(), edges.end());
  const auto unique_end = std::unique(edges.begin(), edges.end());
  out.duplicates_dropped = static_cast<std::size_t>(edges.end() - unique_end);
  edges.erase(unique_end, edges.end());

  std::optional<std::vector<std::uint8_t>> sides;
  if (bipartite) {
    // Isolated nodes take the side shared by the rest of their group.
    std::vector<int> group_side(group_labels.size(), -1);
    for (NodeId i = 0; i < n; ++i) {
      if (side[i] < 0) continue;
      int& gs = group_side[group_of[i]];
      gs = (gs == -1 || gs == side[i]) ? side[i] : 2;
    }
    sides.emplace(n);
    for (NodeId i = 0; i < n; ++i) {
      int s = side[i];
      if (s < 0) s = group_side[group_of[i]];
      if (s < 0 || s > 1)
        throw InputError("cannot determine bipartite side of isolated node '" + out.node_names[i] + "'");
      (*sides)[i] = static_cast<std::uint8_t>(s);
    }
  }
  out.graph = Graph(n, std::move(edges), std::move(sides));
  out.partition = SensitivePartition(std::move(group_of), std::move(group_labels));
  return out;
}

void write_edge_list(const std::filesystem::path& path, const Graph& graph, std::span<const std::string> node_names) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  auto name = [&](NodeId i) { return node_names.empty() ? std::to_string(i) : node_names[i]; };
  for (const auto& e : graph.edges()) {
    // Bipartite edge lists carry side 0 in the first column.
    const bool flip = graph.is_bipartite() && graph.side(e.u) == 1;
    out << name(flip ? e.v : e.u) << ' ' << name(flip ? e.u : e.v) << '\n';
  }
}

void write_attributes(const std::filesystem::path& path, const SensitivePartition& partition,
                      std::span<const std::string> node_names) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (NodeId i = 0; i < partition.num_nodes(); ++i)
    out << (node_names.empty() ? std::to_string(i) : node_names[i]) << ',' << partition.label(partition.group_of(i))
        << '\n';
}

DataSplit split(const Graph& graph, double test_frac, std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw InputError("test fraction must lie in (0, 1)");
  const auto edges = graph.edges();
  if (edges.size() < 2) throw InputError("splitting needs at least two edges");
  const auto n_test = static_cast<std::size_t>(std::floor(test_frac * static_cast<double>(edges.size())));
  if (n_test == 0) throw InputError("test fraction holds out no edges; increase it");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(edges.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng);

  // Each edge is drawn at most once; an edge whose removal would strip a node
  // of its last train edge is rejected and the next draw is taken.
  std::vector<std::size_t> train_degree(graph.num_nodes());
  for (NodeId i = 0; i < graph.num_nodes(); ++i) train_degree[i] = graph.degree(i);
  std::vector<bool> held_out(edges.size(), false);
  DataSplit out;
  out.seed = seed;
  for (std::size_t k : order) {
    if (out.test_pos.size() == n_test) break;
    const auto& e = edges[k];
    if (train_degree[e.u] < 2 || train_degree[e.v] < 2) continue;
    --train_degree[e.u];
    --train_degree[e.v];
    held_out[k] = true;
    out.test_pos.push_back(e);
  }
  if (out.test_pos.size() < n_test)
    throw InputError("cannot hold out " + std::to_string(n_test) + " edges without leaving test nodes unseen in train (" +
                     std::to_string(out.test_pos.size()) + " possible); use a smaller test fraction");

  std::vector<NodePair> train_edges;
  train_edges.reserve(edges.size() - n_test);
  for (std::size_t k = 0; k < edges.size(); ++k)
    if (!held_out[k]) train_edges.push_back(edges[k]);
  out.train = graph.with_edges(std::move(train_edges));

  // Negatives: non-edges of the full graph between nodes seen in train.
  std::vector<NodeId> covered[2];
  for (NodeId i = 0; i < graph.num_nodes(); ++i)
    if (train_degree[i] > 0) covered[graph.side(i)].push_back(i);
  std::size_t candidates = 0;
  if (graph.is_bipartite()) {
    candidates = covered[0].size() * covered[1].size();
  } else {
    const std::size_t k = covered[0].size();
    candidates = k * (k - 1) / 2;
  }
  const std::size_t available = candidates - edges.size();
  if (available < n_test)
    throw InputError("graph has only " + std::to_string(available) + " non-edges for " + std::to_string(n_test) +
                     " negative test pairs");

  if (available < 4 * n_test) {
    std::vector<NodePair> pool;
    pool.reserve(available);
    const auto& left = covered[0];
    const auto& right = graph.is_bipartite() ? covered[1] : covered[0];
    for (std::size_t a = 0; a < left.size(); ++a) {
      for (std::size_t b = graph.is_bipartite() ? 0 : a + 1; b < right.size(); ++b) {
        const auto p = NodePair::make(left[a], right[b]);
        if (!graph.has_edge(p.u, p.v)) pool.push_back(p);
      }
    }
    std::sort(pool.begin(), pool.end());
    for (std::size_t k = 0; k < n_test; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(rng)]);
    }
    out.test_neg.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_test));
  } else {
    std::unordered_set<std::uint64_t> chosen;
    const auto& left = covered[0];
    const auto& right = graph.is_bipartite() ? covered[1] : covered[0];
    std::uniform_int_distribution<std::size_t> pick_left(0, left.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_right(0, right.size() - 1);
    while (out.test_neg.size() < n_test) {
      const NodeId a = left[pick_left(rng)];
      const NodeId b = right[pick_right(rng)];
      if (a == b || graph.has_edge(a, b)) continue;
      const auto p = NodePair::make(a, b);
      if (!chosen.insert(pair_key(p)).second) continue;
      out.test_neg.push_back(p);
    }
  }
  return out;
}

}  // namespace fairlp
