#include "fairlp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <thread>
#include <tuple>

#include "fairlp/error.hpp"

namespace fairlp {

namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string file_stem(const std::string& method) {
  std::string out;
  for (char c : method) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_';
  while (out.find("__") != std::string::npos) out.replace(out.find("__"), 2, "_");
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

void SynthParams::validate() const {
  if (groups < 1 || nodes < groups) throw InputError("synth needs at least one node per group");
  if (!(p_inter > 0.0 && p_inter <= p_intra && p_intra < 1.0))
    throw InputError("synth needs 0 < p_inter <= p_intra < 1");
}

nlohmann::json SynthParams::to_json() const {
  return {{"nodes", nodes}, {"groups", groups}, {"p_intra", p_intra}, {"p_inter", p_inter}, {"seed", seed}};
}

SynthParams SynthParams::from_json(const nlohmann::json& j) {
  SynthParams p;
  p.nodes = j.value("nodes", p.nodes);
  p.groups = j.value("groups", p.groups);
  p.p_intra = j.value("p_intra", p.p_intra);
  p.p_inter = j.value("p_inter", p.p_inter);
  p.seed = j.value("seed", p.seed);
  return p;
}

LoadedGraph synth(const SynthParams& params) {
  params.validate();
  const std::size_t n = params.nodes;
  const std::size_t g = params.groups;
  const std::size_t block = n / g;
  std::vector<GroupId> group_of(n);
  for (std::size_t i = 0; i < n; ++i)
    group_of[i] = static_cast<GroupId>(i < block * g ? i / block : (i - block * g) % g);

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<NodePair> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (unif(rng) < (group_of[i] == group_of[j] ? params.p_intra : params.p_inter)) edges.push_back({i, j});

  std::vector<std::string> labels(g);
  for (std::size_t s = 0; s < g; ++s) labels[s] = "g" + std::to_string(s);
  LoadedGraph out;
  out.graph = Graph(n, std::move(edges));
  out.partition = SensitivePartition(std::move(group_of), std::move(labels));
  out.node_names.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.node_names[i] = std::to_string(i);
  return out;
}

nlohmann::json DatasetSpec::to_json() const {
  nlohmann::json j = {{"name", name}};
  if (synth) {
    j["synth"] = synth->to_json();
  } else {
    j["edges"] = edges.string();
    j["attrs"] = attrs.string();
    j["bipartite"] = bipartite;
  }
  return j;
}

DatasetSpec DatasetSpec::from_json(const nlohmann::json& j) {
  DatasetSpec d;
  if (j.contains("synth")) {
    d.synth = SynthParams::from_json(j.at("synth"));
    d.name = j.value("name", std::string("synth"));
  } else {
    if (!j.contains("edges") || !j.contains("attrs")) throw InputError("dataset needs 'edges' and 'attrs' or 'synth'");
    d.edges = j.at("edges").get<std::string>();
    d.attrs = j.at("attrs").get<std::string>();
    d.bipartite = j.value("bipartite", false);
    d.name = j.value("name", d.edges.parent_path().filename().string());
    if (d.name.empty()) d.name = d.edges.stem().string();
  }
  return d;
}

LoadedGraph DatasetSpec::load() const { return synth ? fairlp::synth(*synth) : load_edge_list(edges, attrs, bipartite); }

std::string Cell::default_label(const TrainConfig& config) {
  std::string label = to_string(config.model);
  if (config.criterion == Criterion::none || config.gamma == 0.0) {
    return config.criterion == Criterion::none ? label
                                               : label + " (" + (config.criterion == Criterion::dp ? "DP" : "EO") +
                                                     ", gamma=0)";
  }
  label += config.criterion == Criterion::dp ? " (DP" : " (EO";
  if (config.gamma != 100.0) label += ", gamma=" + fmt(config.gamma);
  return label + ")";
}

void ExperimentSpec::validate() const {
  if (cells.empty()) throw InputError("experiment needs at least one cell");
  if (seeds.empty()) throw InputError("experiment needs at least one seed");
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw InputError("test fraction must lie in (0, 1)");
  if (jobs < 1) throw InputError("jobs must be >= 1");
  for (const auto& c : cells) c.config.validate();
}

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : cells) {
    auto j = c.config.to_json();
    j["label"] = c.label;
    cj.push_back(j);
  }
  nlohmann::json j = {{"dataset", dataset.to_json()}, {"cells", cj},     {"seeds", seeds},
                      {"test_frac", test_frac},        {"out", out_dir.string()}, {"jobs", jobs}};
  if (eval.eo_threshold) j["eo_threshold"] = *eval.eo_threshold;
  return j;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  if (!j.contains("dataset")) throw InputError("experiment config needs a 'dataset'");
  s.dataset = DatasetSpec::from_json(j.at("dataset"));
  if (j.contains("cells")) {
    for (const auto& cj : j.at("cells")) {
      Cell c;
      c.config = TrainConfig::from_json(cj);
      c.label = cj.value("label", Cell::default_label(c.config));
      s.cells.push_back(std::move(c));
    }
  }
  if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  s.test_frac = j.value("test_frac", s.test_frac);
  if (j.contains("out")) s.out_dir = j.at("out").get<std::string>();
  s.jobs = j.value("jobs", s.jobs);
  if (j.contains("eo_threshold")) s.eval.eo_threshold = j.at("eo_threshold").get<double>();
  return s;
}

RunRecord run_one(const LoadedGraph& data, const DatasetSpec& dataset, const Cell& cell, std::uint64_t seed,
                  double test_frac, const EvalOptions& eval) {
  RunRecord rec;
  rec.method = cell.label;
  rec.seed = seed;
  TrainConfig config = cell.config;
  config.seed = seed;
  rec.json = {{"method", cell.label},
              {"dataset", dataset.to_json()},
              {"seed", seed},
              {"test_frac", test_frac},
              {"config", config.to_json()},
              {"node_ids", data.node_names}};
  if (eval.eo_threshold) rec.json["eo_threshold"] = *eval.eo_threshold;
  try {
    const DataSplit parts = split(data.graph, test_frac, seed);
    rec.json["split"] = {{"train_edges", parts.train.num_edges()},
                         {"test_pos", parts.test_pos.size()},
                         {"test_neg", parts.test_neg.size()}};
    TrainResult trained = train(parts.train, data.partition, config);
    rec.json["training"] = trained.trace.summary();
    rec.json["warnings"] = trained.warnings;
    rec.report = evaluate(*trained.model, data.graph, parts, data.partition, seed, eval);
    rec.json["eval"] = rec.report->to_json(&data.partition);
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.json["error"] = rec.error;
  }
  rec.json["ok"] = rec.ok;
  return rec;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  CompensatedSum total;
  for (double v : values)
    if (std::isfinite(v)) {
      total.add(v);
      ++s.count;
    }
  if (s.count == 0) {
    s.mean = s.std = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = total.value() / static_cast<double>(s.count);
  CompensatedSum sq;
  for (double v : values)
    if (std::isfinite(v)) sq.add((v - s.mean) * (v - s.mean));
  s.std = std::sqrt(sq.value() / static_cast<double>(s.count));
  return s;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double rb_of(const EvalReport& r) { return r.rb && !r.rb->rows.empty() ? r.rb->value : kNan; }

double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return kNan;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

SweepResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const LoadedGraph data = spec.dataset.load();
  const auto runs_dir = spec.out_dir / "runs";
  std::filesystem::create_directories(runs_dir);
  {
    auto out = open_out(spec.out_dir / "experiment.json");
    out << spec.to_json().dump(2) << '\n';
  }

  const std::size_t total = spec.cells.size() * spec.seeds.size();
  SweepResult result;
  result.runs.resize(total);
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const auto& cell = spec.cells[k / spec.seeds.size()];
      const auto seed = spec.seeds[k % spec.seeds.size()];
      RunRecord rec = run_one(data, spec.dataset, cell, seed, spec.test_frac, spec.eval);
      const auto path = runs_dir / (file_stem(rec.method) + "__seed" + std::to_string(seed) + ".json");
      {
        std::ofstream out(path);
        out << rec.json.dump(2) << '\n';
      }
      if (!rec.ok) {
        std::lock_guard lock(io);
        std::fprintf(stderr, "run failed: %s seed %llu: %s\n", rec.method.c_str(),
                     static_cast<unsigned long long>(seed), rec.error.c_str());
      }
      result.runs[k] = std::move(rec);
    }
  };
  const int threads = std::min<int>(spec.jobs, static_cast<int>(total));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& r : result.runs) result.failed += !r.ok;

  const std::string& dataset = spec.dataset.name;
  {
    auto out = open_out(spec.out_dir / "runs.csv");
    out << "method,dataset,seed,auc,dp,eo,rdp,rb\n";
    for (const auto& r : result.runs) {
      if (!r.ok) continue;
      const auto& e = *r.report;
      out << csv_field(r.method) << ',' << csv_field(dataset) << ',' << r.seed << ',' << fmt(e.auc) << ','
          << fmt(e.dp.value) << ',' << fmt(e.eo.value) << ',' << fmt(e.rdp.value) << ',' << fmt(rb_of(e)) << '\n';
    }
  }

  auto out_agg = open_out(spec.out_dir / "aggregate.csv");
  out_agg << "method,dataset,runs,failed,auc_mean,auc_std,dp_mean,dp_std,eo_mean,eo_std,rdp_mean,rdp_std,rb_mean,rb_std\n";
  struct PlotRow {
    std::string method;
    const TrainConfig* config;
    std::string measure;
    MetricSummary unfair;
    MetricSummary auc;
    double median_unfair;
  };
  std::vector<PlotRow> plot;
  for (std::size_t c = 0; c < spec.cells.size(); ++c) {
    std::vector<double> auc, dp, eo, rdp, rb;
    std::size_t failed = 0;
    for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
      const auto& r = result.runs[c * spec.seeds.size() + s];
      if (!r.ok) {
        ++failed;
        continue;
      }
      auc.push_back(r.report->auc);
      dp.push_back(r.report->dp.value);
      eo.push_back(r.report->eo.value);
      rdp.push_back(r.report->rdp.value);
      rb.push_back(rb_of(*r.report));
    }
    const auto a = summarize(auc), d = summarize(dp), o = summarize(eo), q = summarize(rdp), b = summarize(rb);
    out_agg << csv_field(spec.cells[c].label) << ',' << csv_field(dataset) << ',' << auc.size() << ',' << failed;
    for (const auto& m : {a, d, o, q, b}) out_agg << ',' << fmt(m.mean) << ',' << fmt(m.std);
    out_agg << '\n';
    const bool eo_cell = spec.cells[c].config.criterion == Criterion::eo;
    plot.push_back({spec.cells[c].label, &spec.cells[c].config, eo_cell ? "eo" : "dp", eo_cell ? o : d, a,
                    median(eo_cell ? eo : dp)});
  }

  // Trade-off points, ordered by regularisation strength within each
  // (model, criterion) series.
  std::stable_sort(plot.begin(), plot.end(), [](const PlotRow& x, const PlotRow& y) {
    const auto kx = std::tuple(x.config->model, x.measure);
    const auto ky = std::tuple(y.config->model, y.measure);
    if (kx != ky) return kx < ky;
    return x.config->gamma < y.config->gamma;
  });
  auto out_plot = open_out(spec.out_dir / "plot_data.csv");
  out_plot << "method,model,criterion,gamma,measure,unfairness,auc,std_x,std_y,median_unfairness\n";
  for (const auto& p : plot)
    out_plot << csv_field(p.method) << ',' << to_string(p.config->model) << ',' << to_string(p.config->criterion)
             << ',' << fmt(p.config->gamma) << ',' << p.measure << ',' << fmt(p.unfair.mean) << ','
             << fmt(p.auc.mean) << ',' << fmt(p.unfair.std) << ',' << fmt(p.auc.std) << ','
             << fmt(p.median_unfair) << '\n';
  return result;
}

}  // namespace fairlp
