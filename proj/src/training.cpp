#include "fairlp/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

#include "fairlp/error.hpp"
#include "fairlp/iprojection.hpp"

namespace fairlp {

TrainConfig TrainConfig::defaults(ModelKind model) {
  TrainConfig c;
  c.model = model;
  switch (model) {
    case ModelKind::dot:
      c.dims = 128;
      c.lr = 0.01;
      c.epochs = 100;
      break;
    case ModelKind::cne:
      c.dims = 8;
      c.lr = 0.1;
      c.epochs = 200;
      c.s1 = 1.0;
      c.s2 = 16.0;
      break;
    case ModelKind::maxent:
      c.dims = 0;
      c.lr = 0.01;
      c.epochs = 100;
      break;
  }
  return c;
}

void TrainConfig::validate() const {
  if (!(gamma >= 0.0)) throw InputError("gamma must be >= 0");
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (!(lr > 0.0)) throw InputError("learning rate must be positive");
  if (model != ModelKind::maxent && dims == 0) throw InputError("embedding dimension must be positive");
  if (!(inner_tol > 0.0)) throw InputError("inner tolerance must be positive");
  if (!(inner_subsample > 0.0 && inner_subsample <= 1.0)) throw InputError("inner subsample must lie in (0, 1]");
  if (!(negative_fraction > 0.0 && negative_fraction <= 1.0))
    throw InputError("negative fraction must lie in (0, 1]");
  if (!(s1 > 0.0 && s2 > 0.0)) throw InputError("CNE spreads must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"model", to_string(model)},
          {"criterion", to_string(criterion)},
          {"gamma", gamma},
          {"epochs", epochs},
          {"lr", lr},
          {"optimizer", to_string(optimizer)},
          {"seed", seed},
          {"dims", dims},
          {"s1", s1},
          {"s2", s2},
          {"maxent_max_iters", maxent_max_iters},
          {"alpha_bound", alpha_bound},
          {"inner_tol", inner_tol},
          {"inner_max_iters", inner_max_iters},
          {"inner_subsample", inner_subsample},
          {"differentiate_targets", differentiate_targets},
          {"negative_fraction", negative_fraction}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c = defaults(model_from_string(j.value("model", std::string("dot"))));
  if (j.contains("criterion")) c.criterion = criterion_from_string(j.at("criterion").get<std::string>());
  if (j.contains("optimizer")) c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  c.gamma = j.value("gamma", c.gamma);
  c.epochs = j.value("epochs", c.epochs);
  c.lr = j.value("lr", c.lr);
  c.seed = j.value("seed", c.seed);
  c.dims = j.value("dims", c.dims);
  c.s1 = j.value("s1", c.s1);
  c.s2 = j.value("s2", c.s2);
  c.maxent_max_iters = j.value("maxent_max_iters", c.maxent_max_iters);
  c.alpha_bound = j.value("alpha_bound", c.alpha_bound);
  c.inner_tol = j.value("inner_tol", c.inner_tol);
  c.inner_max_iters = j.value("inner_max_iters", c.inner_max_iters);
  c.inner_subsample = j.value("inner_subsample", c.inner_subsample);
  c.differentiate_targets = j.value("differentiate_targets", c.differentiate_targets);
  c.negative_fraction = j.value("negative_fraction", c.negative_fraction);
  return c;
}

void TrainTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "epoch,loss_accuracy,loss_fairness,loss,dual_residual,inner_iterations,seconds\n";
  out << std::setprecision(17);
  for (const auto& r : epochs)
    out << r.epoch << ',' << r.loss_accuracy << ',' << r.loss_fairness << ',' << r.loss << ',' << r.dual_residual
        << ',' << r.inner_iterations << ',' << r.seconds << '\n';
}

nlohmann::json TrainTrace::summary() const {
  if (epochs.empty()) return nlohmann::json::object();
  const auto& first = epochs.front();
  const auto& last = epochs.back();
  double seconds = 0.0;
  long inner = 0;
  for (const auto& r : epochs) {
    seconds += r.seconds;
    inner += r.inner_iterations;
  }
  return {{"epochs", epochs.size()},
          {"initial_loss_fairness", first.loss_fairness},
          {"final_loss_accuracy", last.loss_accuracy},
          {"final_loss_fairness", last.loss_fairness},
          {"final_loss", last.loss},
          {"final_dual_residual", last.dual_residual},
          {"inner_iterations", inner},
          {"seconds", seconds}};
}

TrainTrace train_model(DyadicModel& model, const Graph& graph, const SensitivePartition& partition,
                       const TrainConfig& config,
                       const std::function<void(const EpochRecord&, const DyadicModel&)>& on_epoch) {
  config.validate();
  const PairUniverse universe = enumerate_pairs(graph, partition);
  const auto labels = edge_labels(graph, universe);
  const auto pairs = universe.pairs();
  const bool regularised = config.gamma > 0.0 && config.criterion != Criterion::none;
  const ConstraintSystem system = build_constraints(regularised ? config.criterion : Criterion::none, universe, graph);

  Optimizer optimizer(config.optimizer, model.parameters().size(), config.lr);
  ProjectionOptions inner;
  inner.tol = config.inner_tol;
  inner.max_iters = config.inner_max_iters;
  inner.subsample = config.inner_subsample;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution keep_negative(config.negative_fraction);
  const double negative_weight = 1.0 / config.negative_fraction;

  std::vector<double> lambda;
  std::vector<double> weights(universe.size());
  std::vector<double> probs(universe.size());
  TrainTrace trace;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto logits = model.logits(pairs);
    for (std::size_t k = 0; k < logits.size(); ++k) probs[k] = sigmoid(logits[k]);

    // L_A and dL_A/dlogit = p - a.
    CompensatedSum loss_acc;
    for (std::size_t k = 0; k < logits.size(); ++k) {
      double w = 1.0;
      if (!labels[k] && config.negative_fraction < 1.0) w = keep_negative(rng) ? negative_weight : 0.0;
      loss_acc.add(w * (softplus(logits[k]) - (labels[k] ? logits[k] : 0.0)));
      weights[k] = w * (probs[k] - labels[k]);
    }
    if (!std::isfinite(loss_acc.value()))
      throw NumericalError("non-finite accuracy loss at epoch " + std::to_string(epoch));

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_accuracy = loss_acc.value();
    if (regularised && system.size() > 0) {
      const Targets targets = constraint_targets(system, probs);
      inner.subsample_seed = config.seed + static_cast<std::uint64_t>(epoch);
      Projection proj;
      try {
        proj = project(logits, system, targets.per_constraint, lambda, inner);
      } catch (const NumericalError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + ": " + e.what());
      }
      lambda = proj.lambda;
      rec.loss_fairness = proj.kl;
      rec.dual_residual = proj.dual_residual;
      rec.inner_iterations = proj.iterations;
      const auto fair = fairness_grad_logits(proj, logits, system);
      for (std::size_t k = 0; k < weights.size(); ++k) weights[k] += config.gamma * fair[k];
      if (config.differentiate_targets) {
        const auto via_d = target_grad_logits(proj, logits, system);
        for (std::size_t k = 0; k < weights.size(); ++k) weights[k] += config.gamma * via_d[k];
      }
    }
    rec.loss = rec.loss_accuracy + config.gamma * rec.loss_fairness;
    if (!std::isfinite(rec.loss)) throw NumericalError("non-finite loss at epoch " + std::to_string(epoch));

    gradient_step(model, pairs, weights, optimizer);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec, model);
  }
  return trace;
}

TrainResult train(const Graph& graph, const SensitivePartition& partition, const TrainConfig& config) {
  config.validate();
  TrainResult result;
  const bool regularised = config.gamma > 0.0 && config.criterion != Criterion::none;

  auto fit_prior = [&] {
    const PairUniverse universe = enumerate_pairs(graph, partition);
    MaxEntOptions opts;
    opts.max_iters = config.maxent_max_iters;
    opts.alpha_bound = config.alpha_bound;
    auto fit = fit_maxent(graph, universe, opts);
    for (auto& w : fit.warnings) result.warnings.push_back("maxent: " + w);
    return fit;
  };

  switch (config.model) {
    case ModelKind::maxent: {
      const auto t0 = std::chrono::steady_clock::now();
      auto fit = fit_prior();
      auto model = std::make_unique<MaxEntModel>(std::move(fit.model));
      if (!regularised) {
        EpochRecord rec;
        rec.epoch = 1;
        rec.loss_accuracy = model_cross_entropy(*model, graph, enumerate_pairs(graph, partition));
        rec.loss = rec.loss_accuracy;
        rec.inner_iterations = 0;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.trace.epochs.push_back(rec);
      } else {
        result.trace = train_model(*model, graph, partition, config);
      }
      result.model = std::move(model);
      break;
    }
    case ModelKind::dot: {
      auto model = std::make_unique<DotProductModel>(graph.num_nodes(), config.dims, config.seed);
      result.trace = train_model(*model, graph, partition, config);
      result.model = std::move(model);
      break;
    }
    case ModelKind::cne: {
      auto fit = fit_prior();
      auto model = std::make_unique<CneModel>(fit.model, config.dims, config.s1, config.s2, config.seed);
      result.trace = train_model(*model, graph, partition, config);
      result.model = std::move(model);
      break;
    }
  }
  return result;
}

}  // namespace fairlp
