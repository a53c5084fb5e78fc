#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "safectrl/model.hpp"

namespace safectrl {

enum class PathKind { Next, Until, Finally, Globally, WeakUntil };
enum class OptMode { Min, Max, Exact };
enum class CmpKind { Lt, Le, Gt, Ge };
enum class RewardObj { ReachGoal, Cumulative, CumulativeBounded };

struct PctlNode;
using Pctl = std::shared_ptr<const PctlNode>;

enum class PctlKind { Atom, Deadlock, Not, And, Or, Exists, Forall, Prob, Reward, Steady };

struct PctlNode {
  PctlKind kind = PctlKind::Atom;
  Expr atom;  // Atom

  Pctl a, b;  // Not / And / Or

  // Path operand (Exists / Forall / Prob).
  PathKind path = PathKind::Until;
  Pctl left, right;
  long step_bound = -1;  // U<=k, C<=k; -1 means unbounded

  // Prob / Reward / Steady decoration.
  OptMode mode = OptMode::Exact;
  bool quantitative = false;  // '=?' query
  bool has_bound = false;
  CmpKind cmp = CmpKind::Ge;
  double bound_value = 0.0;

  std::string reward_name;  // Reward
  RewardObj robj = RewardObj::ReachGoal;
};

/// One line of a properties file. `filter` implements the aggregation form
/// `filter(min|avg|max, <query>, <state expr>)`.
struct PropertyQuery {
  enum class Filter { None, Min, Avg, Max };
  Filter filter = Filter::None;
  Expr filter_expr;
  bool forall_states = false;  // `forall <state formula>`: holds in every state
  Pctl root;
  std::string source;
  std::optional<bool> expected;  // trailing `// expect: true|false`
};

struct McOptions {
  double epsilon = 1e-8;
  long max_iterations = 1000000;
  double steady_residual = 1e-10;
};

struct CheckResult {
  bool is_boolean = false;
  bool truth = false;
  double value = 0.0;  // at the initial state, or the filter aggregate
  bool has_aggregate = false;
  double agg_min = 0.0, agg_mean = 0.0, agg_max = 0.0;
};

struct Triple {
  double min = 0.0, mean = 0.0, max = 0.0;
};

struct SynthResult {
  Policy policy;
  double value = 0.0;
};

/// Parses one property in the surface syntax, resolving quoted atoms against
/// the model's labels and raw expressions against its declarations.
PropertyQuery parse_property(const std::string& line, const ExplicitModel& ctx);
std::vector<PropertyQuery> parse_properties(const std::string& text, const ExplicitModel& ctx);
std::string print_property(const PropertyQuery& q);

std::vector<bool> sat_states(const ExplicitModel& x, const Pctl& f, const McOptions& opts = {});

std::vector<double> prob_path(const ExplicitModel& x, PathKind path, const std::vector<bool>& phi,
                              const std::vector<bool>& psi, long bound, OptMode mode,
                              const McOptions& opts = {});

std::vector<double> expected_reward(const ExplicitModel& x, int reward_index, RewardObj obj,
                                    long bound, const std::vector<bool>* goal, OptMode mode,
                                    const McOptions& opts = {});

double steady_state(const ExplicitModel& x, const Expr& ap, const McOptions& opts = {});

Triple accident_freedom(const ExplicitModel& x, const Expr& xi, const Expr& mishap,
                        const Expr& inact, const McOptions& opts = {});

CheckResult check_query(const ExplicitModel& x, const PropertyQuery& q, const McOptions& opts = {});

/// Optimal memoryless deterministic policy for a quantitative P or R query.
SynthResult synth_optimal_policy(const ExplicitModel& x, const PropertyQuery& objective,
                                 const McOptions& opts = {});

}  // namespace safectrl
