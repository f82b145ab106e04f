#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairlp/eval.hpp"
#include "fairlp/graph.hpp"
#include "fairlp/training.hpp"
#include "json.hpp"

namespace fairlp {

struct SynthParams {
  std::size_t nodes = 200;
  std::size_t groups = 2;
  double p_intra = 0.2;
  double p_inter = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthParams from_json(const nlohmann::json& j);
};

/// Stochastic block model: groups are contiguous runs of nodes/groups nodes,
/// leftover nodes are dealt round-robin. Deterministic given the seed.
LoadedGraph synth(const SynthParams& params);

struct DatasetSpec {
  std::string name;
  std::optional<SynthParams> synth;
  std::filesystem::path edges;
  std::filesystem::path attrs;
  bool bipartite = false;

  nlohmann::json to_json() const;
  static DatasetSpec from_json(const nlohmann::json& j);
  LoadedGraph load() const;
};

struct Cell {
  std::string label;  // method name in reports
  TrainConfig config;

  /// e.g. "cne", "cne (DP)", "dot (EO, gamma=10)".
  static std::string default_label(const TrainConfig& config);
};

struct ExperimentSpec {
  DatasetSpec dataset;
  std::vector<Cell> cells;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double test_frac = 0.2;
  std::filesystem::path out_dir = "results";
  int jobs = 1;
  EvalOptions eval;

  /// Throws InputError unless there is at least one cell and one seed.
  void validate() const;
  nlohmann::json to_json() const;
  /// Cells may override any TrainConfig field; missing fields take the
  /// per-model defaults.
  static ExperimentSpec from_json(const nlohmann::json& j);
};

struct RunRecord {
  std::string method;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::optional<EvalReport> report;
  nlohmann::json json;  // the per-run report as written
};

struct SweepResult {
  std::vector<RunRecord> runs;  // cell-major, seed-minor
  std::size_t failed = 0;
};

/// Split, train and evaluate one (cell, seed). Never throws for run-level
/// failures; they are recorded in the returned record.
RunRecord run_one(const LoadedGraph& data, const DatasetSpec& dataset, const Cell& cell, std::uint64_t seed,
                  double test_frac, const EvalOptions& eval);

/// Runs every (cell, seed) with up to spec.jobs threads and writes
/// runs/<method>__seed<k>.json, runs.csv, aggregate.csv and plot_data.csv
/// under spec.out_dir.
SweepResult run_experiment(const ExperimentSpec& spec);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

/// Mean and population std of the finite values.
MetricSummary summarize(const std::vector<double>& values);

}  // namespace fairlp
