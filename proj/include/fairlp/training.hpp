#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fairlp/constraints.hpp"
#include "fairlp/graph.hpp"
#include "fairlp/models.hpp"
#include "fairlp/optim.hpp"
#include "json.hpp"

namespace fairlp {

struct TrainConfig {
  ModelKind model = ModelKind::dot;
  Criterion criterion = Criterion::none;
  double gamma = 100.0;
  int epochs = 100;
  double lr = 0.01;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;

  std::size_t dims = 128;
  double s1 = 1.0;
  double s2 = 16.0;

  int maxent_max_iters = 100;
  double alpha_bound = 20.0;

  double inner_tol = 1e-8;
  int inner_max_iters = 500;
  double inner_subsample = 1.0;
  /// Differentiate L_F through d as well (d is a constant by default).
  bool differentiate_targets = false;
  /// Fraction of non-edges entering L_A each epoch (reweighted by 1/fraction).
  double negative_fraction = 1.0;

  /// Defaults per model kind: dot 128-d Adam lr 0.01 x 100 epochs; cne 8-d
  /// Adam lr 0.1 x 200 epochs with s2 = 16; maxent L-BFGS <= 100 iterations
  /// (Adam lr 0.01 x 100 epochs from the L-BFGS fit when regularised).
  static TrainConfig defaults(ModelKind model);

  /// Throws InputError on out-of-range settings.
  void validate() const;

  nlohmann::json to_json() const;
  /// Starts from defaults(model) and overrides every field present in `j`.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;
  double loss_accuracy = 0.0;  // L_A
  double loss_fairness = 0.0;  // L_F
  double loss = 0.0;           // L_A + gamma L_F
  double dual_residual = 0.0;
  int inner_iterations = 0;
  double seconds = 0.0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;

  void write_csv(const std::filesystem::path& path) const;
  nlohmann::json summary() const;
};

struct TrainResult {
  std::unique_ptr<DyadicModel> model;
  TrainTrace trace;
  std::vector<std::string> warnings;
};

/// Builds the model for `config` and optimises L_A + gamma L_F on the train
/// graph. MaxEnt without a fairness criterion is fitted directly.
TrainResult train(const Graph& graph, const SensitivePartition& partition, const TrainConfig& config);

/// Runs the regularised gradient loop on an existing model.
/// `on_epoch` (optional) sees the model after each update.
TrainTrace train_model(DyadicModel& model, const Graph& graph, const SensitivePartition& partition,
                       const TrainConfig& config,
                       const std::function<void(const EpochRecord&, const DyadicModel&)>& on_epoch = {});

}  // namespace fairlp
