#include "fairlp/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fairlp/error.hpp"
#include "fairlp/numeric.hpp"

namespace fairlp {

std::string to_string(Criterion criterion) {
  switch (criterion) {
    case Criterion::none: return "none";
    case Criterion::dp: return "dp";
    case Criterion::eo: return "eo";
  }
  return "?";
}

Criterion criterion_from_string(const std::string& name) {
  if (name == "none") return Criterion::none;
  if (name == "dp" || name == "DP") return Criterion::dp;
  if (name == "eo" || name == "EO") return Criterion::eo;
  throw InputError("unknown fairness criterion '" + name + "' (expected none, dp or eo)");
}

ConstraintSystem::ConstraintSystem(std::string name, std::size_t universe_size, std::vector<Constraint> constraints,
                                   TargetRule rule, std::vector<double> fixed_targets, std::vector<GroupPair> skipped)
    : name_(std::move(name)),
      constraints_(std::move(constraints)),
      pair_to_constraint_(universe_size, -1),
      rule_(rule),
      fixed_targets_(std::move(fixed_targets)),
      skipped_(std::move(skipped)) {
  if (rule_ == TargetRule::fixed && fixed_targets_.size() != constraints_.size())
    throw InputError("fixed target count does not match constraint count");
  for (std::size_t c = 0; c < constraints_.size(); ++c) {
    auto& members = constraints_[c].members;
    std::sort(members.begin(), members.end());
    if (members.empty()) throw InputError("constraint " + std::to_string(c) + " has no member pairs");
    for (auto k : members) {
      if (k >= universe_size) throw InputError("constraint member outside the pair universe");
      if (pair_to_constraint_[k] != -1)
        throw InputError("pair " + std::to_string(k) + " belongs to more than one constraint");
      pair_to_constraint_[k] = static_cast<std::int32_t>(c);
    }
    support_size_ += members.size();
  }
}

ConstraintSystem build_dp(const PairUniverse& universe) {
  std::vector<Constraint> by_block(universe.num_blocks());
  for (std::size_t b = 0; b < universe.num_blocks(); ++b) by_block[b].group_pair = universe.blocks()[b];
  for (std::size_t k = 0; k < universe.size(); ++k) by_block[universe.block_of(k)].members.push_back(k);
  std::vector<Constraint> constraints;
  std::vector<GroupPair> skipped;
  for (auto& c : by_block) {
    if (c.members.empty())
      skipped.push_back(c.group_pair);
    else
      constraints.push_back(std::move(c));
  }
  return ConstraintSystem("dp", universe.size(), std::move(constraints), TargetRule::mean_over_support, {},
                          std::move(skipped));
}

ConstraintSystem build_eo(const PairUniverse& universe, const Graph& train_graph) {
  std::vector<Constraint> by_block(universe.num_blocks());
  for (std::size_t b = 0; b < universe.num_blocks(); ++b) by_block[b].group_pair = universe.blocks()[b];
  for (const auto& e : train_graph.edges()) {
    auto k = universe.find(e);
    if (!k) throw InputError("train edge is not a candidate pair of the universe");
    by_block[universe.block_of(*k)].members.push_back(*k);
  }
  std::vector<Constraint> constraints;
  std::vector<GroupPair> skipped;
  for (auto& c : by_block) {
    if (c.members.empty())
      skipped.push_back(c.group_pair);
    else
      constraints.push_back(std::move(c));
  }
  return ConstraintSystem("eo", universe.size(), std::move(constraints), TargetRule::mean_over_support, {},
                          std::move(skipped));
}

ConstraintSystem build_constraints(Criterion criterion, const PairUniverse& universe, const Graph& train_graph) {
  switch (criterion) {
    case Criterion::dp: return build_dp(universe);
    case Criterion::eo: return build_eo(universe, train_graph);
    case Criterion::none: break;
  }
  return ConstraintSystem("none", universe.size(), {}, TargetRule::mean_over_support);
}

ConstraintSystem build_custom(std::string name, std::size_t universe_size,
                              std::vector<std::vector<std::size_t>> member_sets, std::vector<double> targets) {
  std::vector<Constraint> constraints;
  for (auto& m : member_sets) constraints.push_back({GroupPair{}, std::move(m)});
  const auto rule = targets.empty() ? TargetRule::mean_over_support : TargetRule::fixed;
  return ConstraintSystem(std::move(name), universe_size, std::move(constraints), rule, std::move(targets));
}

Targets constraint_targets(const ConstraintSystem& system, std::span<const double> probabilities) {
  Targets t;
  if (system.target_rule() == TargetRule::fixed) {
    t.d = std::numeric_limits<double>::quiet_NaN();
    t.per_constraint.assign(system.fixed_targets().begin(), system.fixed_targets().end());
    return t;
  }
  if (system.size() == 0) return t;
  CompensatedSum total;
  for (const auto& c : system.constraints())
    for (auto k : c.members) total.add(probabilities[k]);
  t.d = total.value() / static_cast<double>(system.support_size());
  for (const auto& c : system.constraints()) t.per_constraint.push_back(t.d * static_cast<double>(c.members.size()));
  return t;
}

std::vector<double> eval_constraint(const ConstraintSystem& system, std::span<const double> probabilities) {
  std::vector<double> f;
  f.reserve(system.size());
  for (const auto& c : system.constraints()) {
    CompensatedSum s;
    for (auto k : c.members) s.add(probabilities[k]);
    f.push_back(s.value());
  }
  return f;
}

nlohmann::json constraint_report(const ConstraintSystem& system, std::span<const double> probabilities,
                                 const SensitivePartition* partition) {
  const auto f = eval_constraint(system, probabilities);
  const auto targets = constraint_targets(system, probabilities);
  auto label = [&](GroupId g) { return partition ? partition->label(g) : std::to_string(g); };
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t c = 0; c < system.size(); ++c) {
    const auto& con = system.constraint(c);
    rows.push_back({{"group_pair", {label(con.group_pair.s), label(con.group_pair.t)}},
                    {"members", con.members.size()},
                    {"F", f[c]},
                    {"d", targets.per_constraint[c]}});
  }
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& gp : system.skipped()) skipped.push_back({label(gp.s), label(gp.t)});
  nlohmann::json out = {{"criterion", system.name()}, {"constraints", rows}, {"skipped", skipped}};
  if (std::isfinite(targets.d)) out["d"] = targets.d;
  return out;
}

}  // namespace fairlp
