#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairlp/graph.hpp"
#include "json.hpp"

namespace fairlp {

enum class Criterion { none, dp, eo };

std::string to_string(Criterion criterion);
Criterion criterion_from_string(const std::string& name);

/// How the per-constraint targets d_c are derived from a model.
enum class TargetRule {
  /// d = mean of p_ij(1) over the union of all member sets; d_c = d |members_c|.
  /// For DP the union is U, for EO it is the train edge set.
  mean_over_support,
  /// d_c supplied by the caller.
  fixed,
};

/// One linear expectation constraint sum_{ij in members} p_ij(1) = d_c.
/// f_c({i,j}, x) = x * 1({i,j} in members).
struct Constraint {
  GroupPair group_pair;               // block it was built from (custom: {0,0})
  std::vector<std::size_t> members;   // indices into the pair universe, sorted
};

/// A set of constraints with pairwise disjoint member sets.
class ConstraintSystem {
 public:
  ConstraintSystem() = default;

  /// Throws InputError if member sets overlap or reference pairs outside
  /// [0, universe_size).
  ConstraintSystem(std::string name, std::size_t universe_size, std::vector<Constraint> constraints, TargetRule rule,
                   std::vector<double> fixed_targets = {}, std::vector<GroupPair> skipped = {});

  const std::string& name() const { return name_; }
  std::size_t size() const { return constraints_.size(); }
  std::size_t universe_size() const { return pair_to_constraint_.size(); }
  const Constraint& constraint(std::size_t c) const { return constraints_[c]; }
  std::span<const Constraint> constraints() const { return constraints_; }
  TargetRule target_rule() const { return rule_; }
  std::span<const double> fixed_targets() const { return fixed_targets_; }

  /// Constraint index of a pair, or -1 if the pair is unconstrained.
  std::int32_t constraint_of(std::size_t pair_index) const { return pair_to_constraint_[pair_index]; }
  std::span<const std::int32_t> pair_to_constraint() const { return pair_to_constraint_; }

  /// Total number of constrained pairs.
  std::size_t support_size() const { return support_size_; }

  /// Group pairs with no member pairs, left out of the system.
  std::span<const GroupPair> skipped() const { return skipped_; }

 private:
  std::string name_;
  std::vector<Constraint> constraints_;
  std::vector<std::int32_t> pair_to_constraint_;
  TargetRule rule_ = TargetRule::mean_over_support;
  std::vector<double> fixed_targets_;
  std::vector<GroupPair> skipped_;
  std::size_t support_size_ = 0;
};

/// Demographic parity: one constraint per nonempty block U_st.
ConstraintSystem build_dp(const PairUniverse& universe);

/// Equalised opportunity: one constraint per nonempty E ∩ U_st, with E the
/// edges of `train_graph`.
ConstraintSystem build_eo(const PairUniverse& universe, const Graph& train_graph);

ConstraintSystem build_constraints(Criterion criterion, const PairUniverse& universe, const Graph& train_graph);

/// User-supplied disjoint binary-membership constraints. Empty `targets`
/// means the mean-rate rule; otherwise one fixed target per constraint.
ConstraintSystem build_custom(std::string name, std::size_t universe_size,
                              std::vector<std::vector<std::size_t>> member_sets, std::vector<double> targets = {});

struct Targets {
  double d = 0.0;                  // NaN for fixed targets
  std::vector<double> per_constraint;
};

/// d = mean model probability over the constraint support, d_c = d |members_c|.
Targets constraint_targets(const ConstraintSystem& system, std::span<const double> probabilities);

/// F_c = sum over members of p_ij(1).
std::vector<double> eval_constraint(const ConstraintSystem& system, std::span<const double> probabilities);

/// Audit record: criterion, per-constraint group pair, member count, F_c, d_c.
nlohmann::json constraint_report(const ConstraintSystem& system, std::span<const double> probabilities,
                                 const SensitivePartition* partition = nullptr);

}  // namespace fairlp
