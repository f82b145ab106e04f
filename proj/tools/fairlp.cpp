#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "convert.hpp"
#include "fairlp/error.hpp"
#include "fairlp/eval.hpp"
#include "fairlp/experiment.hpp"
#include "fairlp/graph.hpp"
#include "fairlp/training.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kPartialFailure = 1;
constexpr int kUsageError = 2;

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw fairlp::InputError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw fairlp::InputError(path.string() + ": " + e.what());
  }
}

void print_summary(const char* what, const ConversionSummary& s, const fs::path& out) {
  std::printf("%s: %zu nodes, %zu edges, %zu groups -> %s\n", what, s.nodes, s.edges, s.groups, out.c_str());
  for (const auto& n : s.notes) std::printf("  %s\n", n.c_str());
}

// Flags shared by train and run; unset options leave config values alone.
struct CommonFlags {
  std::string edges;
  std::string attrs;
  bool bipartite = false;
  std::string model;
  std::string fairness;
  std::vector<double> gammas;
  std::optional<double> test_frac;
  std::optional<double> inner_tol;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> dims;
  std::string out;
  std::string config;

  void add_to(CLI::App* app, bool many_gammas) {
    app->add_option("--edges", edges, "Whitespace separated edge list");
    app->add_option("--attrs", attrs, "node_id,group CSV");
    app->add_flag("--bipartite", bipartite, "First edge column is side 0, second side 1");
    app->add_option("--model", model, "maxent, dot or cne");
    app->add_option("--fairness", fairness, "none, dp or eo");
    auto* g = app->add_option("--gamma", gammas, many_gammas ? "Regularisation strength(s), one cell each"
                                                             : "Regularisation strength");
    if (!many_gammas) g->expected(1);
    app->add_option("--test-frac", test_frac, "Held-out edge fraction");
    app->add_option("--inner-tol", inner_tol, "I-projection dual residual tolerance");
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--lr", lr, "Learning rate");
    app->add_option("--dims", dims, "Embedding dimension");
    app->add_option("--out", out, "Output directory");
    app->add_option("--config", config, "JSON config; flags override it");
  }

  void apply(fairlp::TrainConfig& c) const {
    if (!fairness.empty()) c.criterion = fairlp::criterion_from_string(fairness);
    if (inner_tol) c.inner_tol = *inner_tol;
    if (epochs) c.epochs = *epochs;
    if (lr) c.lr = *lr;
    if (dims) c.dims = *dims;
  }

  /// Config for `model`: per-model defaults, then `base` fields, then flags.
  fairlp::TrainConfig resolve(nlohmann::json base) const {
    if (!model.empty()) base["model"] = model;
    auto c = fairlp::TrainConfig::from_json(base);
    apply(c);
    return c;
  }
};

int cmd_train(const CommonFlags& f, std::uint64_t seed) {
  nlohmann::json cfg = f.config.empty() ? nlohmann::json::object() : read_json(f.config);
  fairlp::DatasetSpec dataset;
  if (!f.edges.empty()) {
    cfg["dataset"] = {{"edges", f.edges}, {"attrs", f.attrs}, {"bipartite", f.bipartite}};
  }
  if (!cfg.contains("dataset")) throw fairlp::InputError("train needs --edges and --attrs (or a config dataset)");
  dataset = fairlp::DatasetSpec::from_json(cfg["dataset"]);
  nlohmann::json train_json = cfg.value("train", nlohmann::json::object());
  if (!f.gammas.empty()) train_json["gamma"] = f.gammas.front();
  fairlp::Cell cell;
  cell.config = f.resolve(train_json);
  cell.label = fairlp::Cell::default_label(cell.config);
  const double test_frac = f.test_frac.value_or(cfg.value("test_frac", 0.2));
  const fs::path out = f.out.empty() ? fs::path(cfg.value("out", std::string("train_out"))) : fs::path(f.out);

  const auto data = dataset.load();
  std::fprintf(stderr, "loaded %zu nodes, %zu edges, %zu groups\n", data.graph.num_nodes(), data.graph.num_edges(),
               data.partition.num_groups());
  const auto parts = fairlp::split(data.graph, test_frac, seed);
  auto config = cell.config;
  config.seed = seed;
  auto trained = fairlp::train(parts.train, data.partition, config);
  for (const auto& w : trained.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const auto report = fairlp::evaluate(*trained.model, data.graph, parts, data.partition, seed);

  fs::create_directories(out);
  nlohmann::json j = {{"method", cell.label},
                      {"dataset", dataset.to_json()},
                      {"seed", seed},
                      {"test_frac", test_frac},
                      {"config", config.to_json()},
                      {"node_ids", data.node_names},
                      {"training", trained.trace.summary()},
                      {"warnings", trained.warnings},
                      {"eval", report.to_json(&data.partition)}};
  std::ofstream(out / "report.json") << j.dump(2) << '\n';
  std::ofstream(out / "model.json") << trained.model->to_json().dump() << '\n';
  trained.trace.write_csv(out / "trace.csv");
  std::printf("%s: auc %.4f dp %.4f eo %.4f rdp %.4f", cell.label.c_str(), report.auc, report.dp.value,
              report.eo.value, report.rdp.value);
  if (report.rb && !report.rb->rows.empty()) std::printf(" rb %.4f", report.rb->value);
  std::printf("\n");
  return kOk;
}

int cmd_run(const CommonFlags& f, const std::vector<std::uint64_t>& seeds, std::optional<int> num_seeds,
            std::optional<int> jobs) {
  nlohmann::json cfg = f.config.empty() ? nlohmann::json::object() : read_json(f.config);
  if (!f.edges.empty()) cfg["dataset"] = {{"edges", f.edges}, {"attrs", f.attrs}, {"bipartite", f.bipartite}};
  if (!cfg.contains("dataset")) throw fairlp::InputError("run needs --edges and --attrs (or a config dataset)");
  const bool flag_cells = !f.model.empty() || !f.gammas.empty() || !f.fairness.empty();
  auto spec = fairlp::ExperimentSpec::from_json(cfg);
  if (flag_cells || spec.cells.empty()) {
    // Flags describe the sweep: one cell per gamma.
    nlohmann::json base = cfg.value("train", nlohmann::json::object());
    std::vector<double> gammas = f.gammas;
    if (gammas.empty()) gammas.push_back(base.value("gamma", 100.0));
    spec.cells.clear();
    for (double g : gammas) {
      base["gamma"] = g;
      fairlp::Cell cell;
      cell.config = f.resolve(base);
      cell.label = fairlp::Cell::default_label(cell.config);
      spec.cells.push_back(std::move(cell));
    }
  } else {
    for (auto& cell : spec.cells) f.apply(cell.config);
  }
  if (!seeds.empty()) spec.seeds = seeds;
  if (num_seeds) {
    spec.seeds.clear();
    for (int s = 0; s < *num_seeds; ++s) spec.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (f.test_frac) spec.test_frac = *f.test_frac;
  if (!f.out.empty()) spec.out_dir = f.out;
  if (jobs) spec.jobs = *jobs;

  const auto result = fairlp::run_experiment(spec);
  std::printf("%zu runs, %zu failed -> %s\n", result.runs.size(), result.failed, spec.out_dir.c_str());
  return result.failed ? kPartialFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-regularised link prediction"};
  app.require_subcommand(1);

  fairlp::SynthParams synth_params;
  std::string synth_out = "synth";
  auto* synth = app.add_subcommand("synth", "Generate a stochastic block model graph");
  synth->add_option("--nodes", synth_params.nodes, "Node count")->capture_default_str();
  synth->add_option("--groups", synth_params.groups, "Sensitive group count")->capture_default_str();
  synth->add_option("--p-intra", synth_params.p_intra, "Within-group edge probability")->capture_default_str();
  synth->add_option("--p-inter", synth_params.p_inter, "Between-group edge probability")->capture_default_str();
  synth->add_option("--seed", synth_params.seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->capture_default_str();

  std::string convert_in, convert_out;
  auto* polblogs = app.add_subcommand("convert-polblogs", "Convert polblogs.gml");
  polblogs->add_option("--gml", convert_in, "Path to polblogs.gml")->required();
  polblogs->add_option("--out", convert_out, "Output directory")->required();
  auto* ml100k = app.add_subcommand("convert-ml100k", "Convert MovieLens 100k (u.data, u.user)");
  ml100k->add_option("--dir", convert_in, "Directory holding u.data and u.user")->required();
  ml100k->add_option("--out", convert_out, "Output directory")->required();
  auto* facebook = app.add_subcommand("convert-facebook", "Convert SNAP ego-Facebook");
  facebook->add_option("--dir", convert_in, "Directory holding facebook_combined.txt and ego files")->required();
  facebook->add_option("--out", convert_out, "Output directory")->required();

  CommonFlags train_flags;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "Split, train and evaluate once");
  train_flags.add_to(train, false);
  train->add_option("--seed", train_seed, "Split and initialisation seed")->capture_default_str();

  CommonFlags run_flags;
  std::vector<std::uint64_t> seeds;
  std::optional<int> num_seeds;
  std::optional<int> jobs;
  auto* run = app.add_subcommand("run", "Multi-seed experiment sweep");
  run_flags.add_to(run, true);
  run->add_option("--seeds", seeds, "Seed list");
  run->add_option("--num-seeds", num_seeds, "Use seeds 0..N-1")->excludes("--seeds");
  run->add_option("--jobs", jobs, "Concurrent runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*synth) {
      const auto data = fairlp::synth(synth_params);
      fs::create_directories(synth_out);
      fairlp::write_edge_list(fs::path(synth_out) / "edges.txt", data.graph, data.node_names);
      fairlp::write_attributes(fs::path(synth_out) / "attrs.csv", data.partition, data.node_names);
      std::printf("synth: %zu nodes, %zu edges -> %s\n", data.graph.num_nodes(), data.graph.num_edges(),
                  synth_out.c_str());
      return kOk;
    }
    if (*polblogs) {
      print_summary("polblogs", convert_polblogs(convert_in, convert_out), convert_out);
      return kOk;
    }
    if (*ml100k) {
      print_summary("ml100k", convert_ml100k(convert_in, convert_out), convert_out);
      return kOk;
    }
    if (*facebook) {
      print_summary("facebook", convert_facebook(convert_in, convert_out), convert_out);
      return kOk;
    }
    if (*train) return cmd_train(train_flags, train_seed);
    if (*run) return cmd_run(run_flags, seeds, num_seeds, jobs);
  } catch (const fairlp::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kPartialFailure;
  }
  return kUsageError;
}
