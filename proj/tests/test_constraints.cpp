#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "fairlp/constraints.hpp"
#include "fairlp/error.hpp"
#include "helpers.hpp"

using namespace fairlp;

TEST_CASE("dp has one constraint per populated unordered group pair") {
  Graph g(4, {{0, 1}});
  auto u = enumerate_pairs(g, SensitivePartition({0, 0, 1, 1}));
  auto dp = build_dp(u);
  REQUIRE(dp.size() == 3);
  CHECK(dp.constraint(0).group_pair == GroupPair{0, 0});
  CHECK(dp.constraint(1).group_pair == GroupPair{0, 1});
  CHECK(dp.constraint(2).group_pair == GroupPair{1, 1});
  CHECK(dp.support_size() == u.size());
}

TEST_CASE("bipartite user groups against one item group give one constraint per user group") {
  // 7 user groups on side 0, all items in group 7 on side 1.
  std::vector<std::uint8_t> sides;
  std::vector<GroupId> groups;
  std::vector<NodePair> edges;
  for (GroupId s = 0; s < 7; ++s)
    for (int k = 0; k < 2; ++k) {
      sides.push_back(0);
      groups.push_back(s);
    }
  for (int m = 0; m < 3; ++m) {
    sides.push_back(1);
    groups.push_back(7);
  }
  for (NodeId u = 0; u < 14; ++u) edges.push_back({u, static_cast<NodeId>(14 + u % 3)});
  Graph g(17, edges, sides);
  auto u = enumerate_pairs(g, SensitivePartition(groups));
  auto dp = build_dp(u);
  CHECK(dp.size() == 7);
  for (const auto& c : dp.constraints()) CHECK(c.group_pair.t == 7);
  CHECK(dp.skipped().size() == 36 - 7);
}

TEST_CASE("eo constraints follow train edges") {
  Graph k4(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  auto u = enumerate_pairs(k4, SensitivePartition({0, 0, 1, 1}));
  auto eo = build_eo(u, k4);
  REQUIRE(eo.size() == 3);
  CHECK(eo.constraint(0).members.size() == 1);
  CHECK(eo.constraint(1).members.size() == 4);
  CHECK(eo.constraint(2).members.size() == 1);

  Graph inside(4, {{0, 1}});
  auto u2 = enumerate_pairs(inside, SensitivePartition({0, 0, 1, 1}));
  auto eo2 = build_eo(u2, inside);
  REQUIRE(eo2.size() == 1);
  CHECK(eo2.constraint(0).group_pair == GroupPair{0, 0});
  CHECK(std::ranges::equal(eo2.skipped(), std::vector<GroupPair>{{0, 1}, {1, 1}}));
}

TEST_CASE("membership sets partition the support") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 4 + rng() % 20;
    auto g = testing::random_graph(n, 0.25, rng);
    auto p = testing::random_partition(n, 1 + rng() % 4, rng);
    auto u = enumerate_pairs(g, p);
    auto dp = build_dp(u);
    auto eo = build_eo(u, g);
    std::set<std::size_t> seen_dp, seen_eo;
    for (const auto& c : dp.constraints())
      for (auto k : c.members) CHECK(seen_dp.insert(k).second);
    CHECK(seen_dp.size() == u.size());
    for (const auto& c : eo.constraints())
      for (auto k : c.members) {
        CHECK(seen_eo.insert(k).second);
        CHECK(g.has_edge(u.pair(k).u, u.pair(k).v));
      }
    CHECK(seen_eo.size() == g.num_edges());

    // Targets conserve the total expected edge mass.
    std::vector<double> probs(u.size());
    std::uniform_real_distribution<double> unif(0.01, 0.99);
    for (auto& q : probs) q = unif(rng);
    auto t = constraint_targets(dp, probs);
    CHECK(std::accumulate(t.per_constraint.begin(), t.per_constraint.end(), 0.0) ==
          doctest::Approx(std::accumulate(probs.begin(), probs.end(), 0.0)).epsilon(1e-12));

    auto again = build_dp(u);
    for (std::size_t c = 0; c < dp.size(); ++c) CHECK(again.constraint(c).members == dp.constraint(c).members);
  }
}

TEST_CASE("constraint targets") {
  // Two singleton blocks with p = (0.2, 0.6).
  auto sys = build_custom("two", 2, {{0}, {1}});
  std::vector<double> probs = {0.2, 0.6};
  auto t = constraint_targets(sys, probs);
  CHECK(t.d == doctest::Approx(0.4));
  CHECK(t.per_constraint[0] == doctest::Approx(0.4));
  CHECK(t.per_constraint[1] == doctest::Approx(0.4));

  Graph g(4, {{0, 1}});
  auto u = enumerate_pairs(g, SensitivePartition({0, 0, 1, 1}));
  auto dp = build_dp(u);
  std::vector<double> half(u.size(), 0.5);
  auto th = constraint_targets(dp, half);
  CHECK(th.d == doctest::Approx(0.5));
  CHECK(th.per_constraint[1] == doctest::Approx(2.0));

  auto eo = build_eo(u, g);
  std::vector<double> pe(u.size(), 0.1);
  pe[*u.find({0, 1})] = 0.7;
  auto te = constraint_targets(eo, pe);
  CHECK(te.d == doctest::Approx(0.7));
  REQUIRE(te.per_constraint.size() == 1);
  CHECK(te.per_constraint[0] == doctest::Approx(0.7));
}

TEST_CASE("eval_constraint sums member marginals") {
  auto sys = build_custom("block", 4, {{0, 1, 2}});
  std::vector<double> probs = {0.1, 0.2, 0.3, 0.9};
  CHECK(eval_constraint(sys, probs)[0] == doctest::Approx(0.6));
  std::vector<double> zeros(4, 0.0);
  CHECK(eval_constraint(sys, zeros)[0] == 0.0);

  auto fixed = build_custom("fixed", 4, {{0, 1}, {2}}, {0.5, 0.3});
  CHECK(fixed.target_rule() == TargetRule::fixed);
  CHECK(constraint_targets(fixed, probs).per_constraint == std::vector<double>{0.5, 0.3});
}

TEST_CASE("custom constraints must be disjoint and in range") {
  CHECK_THROWS_AS(build_custom("overlap", 3, {{0, 1}, {1, 2}}), InputError);
  CHECK_THROWS_AS(build_custom("range", 3, {{0, 5}}), InputError);
  CHECK_THROWS_AS(build_custom("count", 3, {{0}}, {0.1, 0.2}), InputError);
  CHECK_THROWS_AS(criterion_from_string("parity"), InputError);
}

TEST_CASE("constraint report lists every constraint") {
  Graph g(4, {{0, 1}, {2, 3}});
  SensitivePartition p({0, 0, 1, 1}, {"a", "b"});
  auto u = enumerate_pairs(g, p);
  auto dp = build_dp(u);
  std::vector<double> probs(u.size(), 0.25);
  auto j = constraint_report(dp, probs, &p);
  CHECK(j["criterion"] == "dp");
  CHECK(j["constraints"].size() == 3);
  CHECK(j["constraints"][1]["group_pair"][1] == "b");
  CHECK(j["d"].get<double>() == doctest::Approx(0.25));
}
