#include "fairlp/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "fairlp/error.hpp"

namespace fairlp {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::maxent: return "maxent";
    case ModelKind::dot: return "dot";
    case ModelKind::cne: return "cne";
  }
  return "?";
}

ModelKind model_from_string(const std::string& name) {
  if (name == "maxent") return ModelKind::maxent;
  if (name == "dot" || name == "dot-product") return ModelKind::dot;
  if (name == "cne") return ModelKind::cne;
  throw InputError("unknown model '" + name + "' (expected maxent, dot or cne)");
}

std::vector<double> DyadicModel::logits(std::span<const NodePair> pairs) const {
  std::vector<double> out(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) out[k] = logit(pairs[k]);
  return out;
}

void DyadicModel::accumulate_gradient(std::span<const NodePair> pairs, std::span<const double> weights,
                                      std::span<double> grad) const {
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double w = weights[k];
    if (!std::isfinite(w))
      throw NumericalError("non-finite gradient weight at pair " + std::to_string(k) + " {" +
                           std::to_string(pairs[k].u) + "," + std::to_string(pairs[k].v) + "}");
    if (w == 0.0) continue;
    if (logit_is_clamped(raw_logit(pairs[k]))) continue;
    add_raw_logit_gradient(pairs[k], w, grad);
  }
}

nlohmann::json MaxEntModel::to_json() const {
  return {{"kind", "maxent"}, {"num_nodes", alpha_.size()}, {"dims", 0}, {"parameters", alpha_}};
}

namespace {

std::vector<double> gaussian_init(std::size_t count, std::size_t dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dims)));
  std::vector<double> x(count * dims);
  for (auto& v : x) v = normal(rng);
  return x;
}

}  // namespace

DotProductModel::DotProductModel(std::size_t num_nodes, std::size_t dims, std::uint64_t seed)
    : DotProductModel(num_nodes, dims, gaussian_init(num_nodes, dims, seed)) {}

DotProductModel::DotProductModel(std::size_t num_nodes, std::size_t dims, std::vector<double> embedding)
    : n_(num_nodes), dims_(dims), x_(std::move(embedding)) {
  if (dims_ == 0) throw InputError("embedding dimension must be positive");
  if (x_.size() != n_ * dims_) throw InputError("embedding size does not match num_nodes x dims");
}

double DotProductModel::raw_logit(NodePair p) const {
  const double* a = x_.data() + p.u * dims_;
  const double* b = x_.data() + p.v * dims_;
  double s = 0.0;
  for (std::size_t d = 0; d < dims_; ++d) s += a[d] * b[d];
  return s;
}

void DotProductModel::add_raw_logit_gradient(NodePair p, double weight, std::span<double> grad) const {
  const double* a = x_.data() + p.u * dims_;
  const double* b = x_.data() + p.v * dims_;
  double* ga = grad.data() + p.u * dims_;
  double* gb = grad.data() + p.v * dims_;
  for (std::size_t d = 0; d < dims_; ++d) {
    ga[d] += weight * b[d];
    gb[d] += weight * a[d];
  }
}

nlohmann::json DotProductModel::to_json() const {
  return {{"kind", "dot"}, {"num_nodes", n_}, {"dims", dims_}, {"parameters", x_}};
}

CneModel::CneModel(const MaxEntModel& prior, std::size_t dims, double s1, double s2, std::uint64_t seed)
    : CneModel(prior, dims, s1, s2, gaussian_init(prior.num_nodes(), dims, seed)) {}

CneModel::CneModel(MaxEntModel prior, std::size_t dims, double s1, double s2, std::vector<double> embedding)
    : prior_(std::move(prior)), dims_(dims), s1_(s1), s2_(s2), x_(std::move(embedding)) {
  if (dims_ == 0) throw InputError("embedding dimension must be positive");
  if (!(s1_ > 0.0 && s2_ > 0.0)) throw InputError("CNE spreads s1, s2 must be positive");
  offset_ = std::log(s2_ / s1_);
  quad_ = 1.0 / (2.0 * s2_ * s2_) - 1.0 / (2.0 * s1_ * s1_);
  if (x_.size() != num_nodes() * dims_)
    throw InputError("embedding size does not match num_nodes x dims");
}

double CneModel::squared_distance(NodePair p) const {
  const double* a = x_.data() + p.u * dims_;
  const double* b = x_.data() + p.v * dims_;
  double s = 0.0;
  for (std::size_t d = 0; d < dims_; ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

double CneModel::raw_logit(NodePair p) const {
  return prior_.logit(p) + offset_ + quad_ * squared_distance(p);
}

void CneModel::add_raw_logit_gradient(NodePair p, double weight, std::span<double> grad) const {
  // d logit / d x_i = 2 quad (x_i - x_j), and the negation for x_j.
  const double* a = x_.data() + p.u * dims_;
  const double* b = x_.data() + p.v * dims_;
  double* ga = grad.data() + p.u * dims_;
  double* gb = grad.data() + p.v * dims_;
  const double c = 2.0 * quad_ * weight;
  for (std::size_t d = 0; d < dims_; ++d) {
    const double g = c * (a[d] - b[d]);
    ga[d] += g;
    gb[d] -= g;
  }
}

nlohmann::json CneModel::to_json() const {
  return {{"kind", "cne"},       {"num_nodes", num_nodes()}, {"dims", dims_},
          {"s1", s1_},           {"s2", s2_},                {"prior_alpha", prior_.alpha()},
          {"parameters", x_}};
}

std::unique_ptr<DyadicModel> model_from_json(const nlohmann::json& j) {
  const auto kind = model_from_string(j.at("kind").get<std::string>());
  const auto n = j.at("num_nodes").get<std::size_t>();
  auto params = j.at("parameters").get<std::vector<double>>();
  switch (kind) {
    case ModelKind::maxent:
      if (params.size() != n) throw InputError("maxent checkpoint has wrong parameter count");
      return std::make_unique<MaxEntModel>(std::move(params));
    case ModelKind::dot:
      return std::make_unique<DotProductModel>(n, j.at("dims").get<std::size_t>(), std::move(params));
    case ModelKind::cne:
      return std::make_unique<CneModel>(MaxEntModel(j.at("prior_alpha").get<std::vector<double>>()),
                                        j.at("dims").get<std::size_t>(), j.at("s1").get<double>(),
                                        j.at("s2").get<double>(), std::move(params));
  }
  throw InputError("unsupported model kind");
}

std::vector<double> expected_degrees(const DyadicModel& model, const PairUniverse& universe) {
  std::vector<double> deg(model.num_nodes(), 0.0);
  for (const auto& p : universe.pairs()) {
    const double prob = model.probability(p);
    deg[p.u] += prob;
    deg[p.v] += prob;
  }
  return deg;
}

MaxEntFit fit_maxent(const Graph& graph, const PairUniverse& universe, const MaxEntOptions& options) {
  const std::size_t n = graph.num_nodes();

  // Degree classes: nodes with equal (side, degree).
  std::unordered_map<std::uint64_t, std::uint32_t> class_index;
  std::vector<std::uint32_t> class_of(n);
  std::vector<std::size_t> class_degree;
  std::vector<std::size_t> class_size;
  std::vector<std::size_t> class_partners;
  for (NodeId i = 0; i < n; ++i) {
    const std::uint64_t key = (static_cast<std::uint64_t>(graph.side(i)) << 40) | graph.degree(i);
    auto [it, inserted] = class_index.try_emplace(key, static_cast<std::uint32_t>(class_degree.size()));
    if (inserted) {
      class_degree.push_back(graph.degree(i));
      class_size.push_back(0);
      class_partners.push_back(graph.candidate_partners(i));
    }
    class_of[i] = it->second;
    ++class_size[it->second];
  }
  const std::size_t k_classes = class_degree.size();

  // Pair counts between classes (a <= b).
  std::unordered_map<std::uint64_t, double> counts;
  for (const auto& p : universe.pairs()) {
    auto a = class_of[p.u];
    auto b = class_of[p.v];
    if (a > b) std::swap(a, b);
    counts[(static_cast<std::uint64_t>(a) << 32) | b] += 1.0;
  }
  struct ClassPair {
    std::uint32_t a, b;
    double count;
  };
  std::vector<ClassPair> class_pairs;
  class_pairs.reserve(counts.size());
  for (const auto& [key, c] : counts)
    class_pairs.push_back({static_cast<std::uint32_t>(key >> 32), static_cast<std::uint32_t>(key & 0xffffffffu), c});
  std::sort(class_pairs.begin(), class_pairs.end(),
            [](const ClassPair& x, const ClassPair& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });

  MaxEntFit fit{MaxEntModel(std::vector<double>(n, 0.0)), 0, 0.0, false, {}};
  std::vector<bool> fixed(k_classes, false);
  std::vector<double> beta(k_classes, 0.0);
  for (std::size_t c = 0; c < k_classes; ++c) {
    const double deg = static_cast<double>(class_degree[c]);
    const double partners = static_cast<double>(class_partners[c]);
    if (class_degree[c] == 0) {
      fixed[c] = true;
      beta[c] = -options.alpha_bound;
    } else if (class_degree[c] >= class_partners[c]) {
      fixed[c] = true;
      beta[c] = options.alpha_bound;
      fit.warnings.push_back("degree-" + std::to_string(class_degree[c]) +
                             " nodes are linked to every candidate partner; potential clamped to " +
                             std::to_string(options.alpha_bound));
    } else {
      beta[c] = 0.5 * logit(deg / partners);
    }
  }
  std::vector<double> degree_mass(k_classes);
  for (std::size_t c = 0; c < k_classes; ++c)
    degree_mass[c] = static_cast<double>(class_size[c]) * static_cast<double>(class_degree[c]);

  auto objective = [&](std::span<const double> x, std::span<double> grad) {
    double f = 0.0;
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t c = 0; c < k_classes; ++c) {
      f -= x[c] * degree_mass[c];
      grad[c] -= degree_mass[c];
    }
    for (const auto& cp : class_pairs) {
      const double z = x[cp.a] + x[cp.b];
      f += cp.count * softplus(z);
      const double g = cp.count * sigmoid(z);
      grad[cp.a] += g;
      grad[cp.b] += g;
    }
    for (std::size_t c = 0; c < k_classes; ++c)
      if (fixed[c]) grad[c] = 0.0;
    return f;
  };

  LbfgsOptions lbfgs;
  lbfgs.max_iters = options.max_iters;
  lbfgs.grad_tol = options.degree_tol;
  lbfgs.history = 20;
  const auto result = minimize_lbfgs(objective, beta, lbfgs);
  fit.iterations = result.iterations;
  fit.converged = result.converged;

  bool clamped = false;
  std::vector<double> alpha(n);
  for (NodeId i = 0; i < n; ++i) {
    double a = beta[class_of[i]];
    if (std::abs(a) > options.alpha_bound) {
      a = std::clamp(a, -options.alpha_bound, options.alpha_bound);
      clamped = true;
    }
    alpha[i] = a;
  }
  if (clamped) fit.warnings.push_back("some MaxEnt potentials diverged and were clamped");
  if (!fit.converged)
    fit.warnings.push_back("MaxEnt fit stopped after " + std::to_string(fit.iterations) +
                           " iterations with gradient " + std::to_string(result.grad_max));
  fit.model = MaxEntModel(std::move(alpha));

  const auto expected = expected_degrees(fit.model, universe);
  for (NodeId i = 0; i < n; ++i)
    fit.max_degree_error =
        std::max(fit.max_degree_error, std::abs(expected[i] - static_cast<double>(graph.degree(i))));
  return fit;
}

double cross_entropy(std::span<const double> logits, std::span<const std::uint8_t> labels) {
  // -[a log sigmoid(l) + (1 - a) log sigmoid(-l)] = softplus(l) - a l
  CompensatedSum sum;
  for (std::size_t k = 0; k < logits.size(); ++k) sum.add(softplus(logits[k]) - (labels[k] ? logits[k] : 0.0));
  return sum.value();
}

double model_cross_entropy(const DyadicModel& model, const Graph& graph, const PairUniverse& universe) {
  return cross_entropy(model.logits(universe.pairs()), edge_labels(graph, universe));
}

void gradient_step(DyadicModel& model, std::span<const NodePair> pairs, std::span<const double> logit_weights,
                   Optimizer& optimizer) {
  std::vector<double> grad(model.parameters().size(), 0.0);
  model.accumulate_gradient(pairs, logit_weights, grad);
  optimizer.step(model.parameters(), grad);
}

}  // namespace fairlp
