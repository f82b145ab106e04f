#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fairlp/graph.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fairlp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) { std::ofstream(path) << text; }

/// Erdos-Renyi graph with every node in some edge (isolated nodes get one
/// random edge).
inline fairlp::Graph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<fairlp::NodePair> edges;
  std::vector<int> deg(n, 0);
  for (fairlp::NodeId i = 0; i < n; ++i)
    for (fairlp::NodeId j = i + 1; j < n; ++j)
      if (coin(rng)) {
        edges.push_back({i, j});
        ++deg[i];
        ++deg[j];
      }
  std::uniform_int_distribution<fairlp::NodeId> pick(0, static_cast<fairlp::NodeId>(n - 1));
  for (fairlp::NodeId i = 0; i < n; ++i) {
    if (deg[i] > 0) continue;
    fairlp::NodeId j = pick(rng);
    while (j == i) j = pick(rng);
    auto e = fairlp::NodePair::make(i, j);
    if (std::find(edges.begin(), edges.end(), e) == edges.end()) {
      edges.push_back(e);
      ++deg[i];
      ++deg[j];
    }
  }
  return fairlp::Graph(n, std::move(edges));
}

/// Random partition with every group nonempty (groups <= n).
inline fairlp::SensitivePartition random_partition(std::size_t n, std::size_t groups, std::mt19937_64& rng) {
  std::vector<fairlp::GroupId> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<fairlp::GroupId>(i % groups);
  std::shuffle(g.begin(), g.end(), rng);
  return fairlp::SensitivePartition(std::move(g));
}

}  // namespace testing
