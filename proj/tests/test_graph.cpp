#include <algorithm>
#include <numeric>
#include <set>

#include "doctest.h"
#include "fairlp/error.hpp"
#include "fairlp/graph.hpp"
#include "helpers.hpp"

using namespace fairlp;

TEST_CASE("load_edge_list parses edges and attributes") {
  auto dir = testing::temp_dir("load_basic");
  testing::write_file(dir / "e.txt", "0 1\n1 2\n");
  testing::write_file(dir / "a.csv", "0,a\n1,a\n2,b\n");
  auto g = load_edge_list(dir / "e.txt", dir / "a.csv", false);
  CHECK(g.graph.num_nodes() == 3);
  CHECK(g.graph.num_edges() == 2);
  CHECK(g.partition.num_groups() == 2);
  CHECK(g.partition.label(0) == "a");
  CHECK(g.partition.members(0).size() == 2);
  CHECK(g.partition.group_of(2) == 1);
}

TEST_CASE("load_edge_list drops duplicates and self-loops with counts") {
  auto dir = testing::temp_dir("load_dups");
  testing::write_file(dir / "e.txt", "0 1\n0 1\n1 1\n");
  testing::write_file(dir / "a.csv", "0,x\n1,y\n");
  auto g = load_edge_list(dir / "e.txt", dir / "a.csv", false);
  CHECK(g.graph.num_edges() == 1);
  CHECK(g.duplicates_dropped == 1);
  CHECK(g.self_loops_dropped == 1);
}

TEST_CASE("load_edge_list keeps attribute-only nodes and rejects unknown ones") {
  auto dir = testing::temp_dir("load_iso");
  testing::write_file(dir / "e.txt", "# comment\n0 1\n");
  testing::write_file(dir / "a.csv", "0,a\n1,b\n7,b\n");
  auto g = load_edge_list(dir / "e.txt", dir / "a.csv", false);
  CHECK(g.graph.num_nodes() == 3);
  CHECK(g.graph.degree(2) == 0);
  CHECK(g.node_names[2] == "7");

  testing::write_file(dir / "e2.txt", "0 9\n");
  CHECK_THROWS_AS(load_edge_list(dir / "e2.txt", dir / "a.csv", false), InputError);
  CHECK_THROWS_AS(load_edge_list(dir / "missing.txt", dir / "a.csv", false), InputError);
}

TEST_CASE("bipartite loading assigns sides by column") {
  auto dir = testing::temp_dir("load_bip");
  testing::write_file(dir / "e.txt", "u1 m1\nu2 m1\nu1 m2\n");
  testing::write_file(dir / "a.csv", "u1,young\nu2,old\nm1,movie\nm2,movie\n");
  auto g = load_edge_list(dir / "e.txt", dir / "a.csv", true);
  REQUIRE(g.graph.is_bipartite());
  CHECK(g.graph.side(0) == 0);
  CHECK(g.graph.side(2) == 1);
  auto u = enumerate_pairs(g.graph, g.partition);
  CHECK(u.size() == 4);
}

TEST_CASE("edge list round trip") {
  auto dir = testing::temp_dir("roundtrip");
  std::mt19937_64 rng(3);
  auto graph = testing::random_graph(12, 0.3, rng);
  auto part = testing::random_partition(12, 3, rng);
  write_edge_list(dir / "e.txt", graph);
  write_attributes(dir / "a.csv", part);
  auto back = load_edge_list(dir / "e.txt", dir / "a.csv", false);
  CHECK(std::ranges::equal(back.graph.edges(), graph.edges()));
  // Group ids may be renumbered; labels must survive.
  for (NodeId i = 0; i < 12; ++i) CHECK(back.partition.label(back.partition.group_of(i)) == part.label(part.group_of(i)));
}

TEST_CASE("enumerate_pairs block sizes") {
  Graph g(4, {{0, 1}});
  SensitivePartition p({0, 0, 1, 1});
  auto u = enumerate_pairs(g, p);
  CHECK(u.size() == 6);
  REQUIRE(u.num_blocks() == 3);
  CHECK(u.block_sizes()[u.block_id({0, 0})] == 1);
  CHECK(u.block_sizes()[u.block_id({0, 1})] == 4);
  CHECK(u.block_sizes()[u.block_id({1, 1})] == 1);

  Graph g3(3, {{0, 1}});
  auto u3 = enumerate_pairs(g3, SensitivePartition({0, 0, 0}));
  CHECK(u3.size() == 3);
  CHECK(u3.block_sizes()[0] == 3);

  Graph bip(3, {{0, 2}}, std::vector<std::uint8_t>{0, 0, 1});
  auto ub = enumerate_pairs(bip, SensitivePartition({0, 0, 1}));
  REQUIRE(ub.size() == 2);
  CHECK(ub.pair(0) == NodePair{0, 2});
  CHECK(ub.pair(1) == NodePair{1, 2});
  CHECK(ub.block_sizes()[ub.block_id({0, 0})] == 0);
}

TEST_CASE("block sizes sum to the universe size") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng() % 25;
    auto g = testing::random_graph(n, 0.2, rng);
    auto p = testing::random_partition(n, 1 + rng() % std::min<std::size_t>(n, 5), rng);
    auto u = enumerate_pairs(g, p);
    CHECK(std::accumulate(u.block_sizes().begin(), u.block_sizes().end(), std::size_t{0}) == u.size());
    CHECK(u.size() == n * (n - 1) / 2);
    for (std::size_t k = 0; k < u.size(); ++k) {
      const auto gp = GroupPair::make(p.group_of(u.pair(k).u), p.group_of(u.pair(k).v));
      CHECK(u.blocks()[u.block_of(k)] == gp);
    }
  }
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(Graph(3, {{1, 1}}), InputError);
  CHECK_THROWS_AS(Graph(3, {{0, 5}}), InputError);
  CHECK_THROWS_AS(Graph(3, {{0, 1}, {1, 0}}), InputError);
  CHECK_THROWS_AS(Graph(3, {{0, 1}}, std::vector<std::uint8_t>{0, 0, 1}), InputError);
  CHECK_THROWS_AS(SensitivePartition({0, 2}), InputError);
}

TEST_CASE("split invariants on random graphs") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 10 + rng() % 30;
    auto g = testing::random_graph(n, 0.3, rng);
    const auto s = split(g, 0.2, trial);
    const auto expected = static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(g.num_edges())));
    CHECK(s.test_pos.size() == expected);
    CHECK(s.test_neg.size() == s.test_pos.size());

    std::set<NodePair> all(g.edges().begin(), g.edges().end());
    std::set<NodePair> train(s.train.edges().begin(), s.train.edges().end());
    std::set<NodePair> test(s.test_pos.begin(), s.test_pos.end());
    CHECK(test.size() == s.test_pos.size());
    std::set<NodePair> joined = train;
    joined.insert(test.begin(), test.end());
    CHECK(joined == all);
    CHECK(train.size() + test.size() == all.size());
    std::set<NodePair> negs(s.test_neg.begin(), s.test_neg.end());
    CHECK(negs.size() == s.test_neg.size());
    for (const auto& p : s.test_neg) {
      CHECK_FALSE(g.has_edge(p.u, p.v));
      CHECK(p.u < p.v);
    }
    for (const auto& p : s.test_pos) {
      CHECK(s.train.degree(p.u) > 0);
      CHECK(s.train.degree(p.v) > 0);
    }
    for (const auto& p : s.test_neg) {
      CHECK(s.train.degree(p.u) > 0);
      CHECK(s.train.degree(p.v) > 0);
    }
  }
}

TEST_CASE("split is deterministic given the seed") {
  std::mt19937_64 rng(8);
  auto g = testing::random_graph(30, 0.2, rng);
  auto a = split(g, 0.2, 42);
  auto b = split(g, 0.2, 42);
  auto c = split(g, 0.2, 43);
  CHECK(std::ranges::equal(a.train.edges(), b.train.edges()));
  CHECK(a.test_pos == b.test_pos);
  CHECK(a.test_neg == b.test_neg);
  CHECK((a.test_pos != c.test_pos || a.test_neg != c.test_neg));
}

TEST_CASE("split respects bipartiteness") {
  std::mt19937_64 rng(9);
  std::vector<NodePair> edges;
  std::vector<std::uint8_t> sides(20);
  for (NodeId i = 0; i < 20; ++i) sides[i] = i >= 8;
  std::bernoulli_distribution coin(0.5);
  for (NodeId i = 0; i < 8; ++i)
    for (NodeId j = 8; j < 20; ++j)
      if (coin(rng)) edges.push_back({i, j});
  Graph g(20, edges, sides);
  auto s = split(g, 0.2, 1);
  for (const auto& p : s.test_neg) CHECK(sides[p.u] != sides[p.v]);
}

TEST_CASE("split rejects degenerate inputs") {
  // Star on 4 nodes: holding out any edge leaves its leaf without a train edge.
  Graph star(4, {{0, 1}, {0, 2}, {0, 3}});
  CHECK_THROWS_AS(split(star, 0.34, 0), InputError);
  // K4 has no non-edges to use as negatives.
  Graph k4(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  CHECK_THROWS_AS(split(k4, 0.2, 0), InputError);
  CHECK_THROWS_AS(split(Graph(3, {{0, 1}}), 0.5, 0), InputError);
}
