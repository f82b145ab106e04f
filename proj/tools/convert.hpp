#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

// One-shot converters from public dataset formats to edges.txt + attrs.csv.

struct ConversionSummary {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t groups = 0;
  std::vector<std::string> notes;
};

/// Political blogs GML (node "value" = party). Direction and multi-edges are
/// dropped and only the largest connected component is kept.
ConversionSummary convert_polblogs(const std::filesystem::path& gml, const std::filesystem::path& out_dir);

/// MovieLens 100k u.data + u.user. Users are grouped by age bin
/// (<18, 18-24, 25-34, 35-44, 45-49, 50-55, 56+), items form one group
/// "movie". The edge list is bipartite with users in the first column.
ConversionSummary convert_ml100k(const std::filesystem::path& dir, const std::filesystem::path& out_dir);

/// SNAP ego-Facebook: facebook_combined.txt plus the per-ego feature files
/// (searched in dir and dir/facebook). Nodes without a gender feature are
/// removed with their edges.
ConversionSummary convert_facebook(const std::filesystem::path& dir, const std::filesystem::path& out_dir);
