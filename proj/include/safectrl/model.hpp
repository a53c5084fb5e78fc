#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "safectrl/expr.hpp"

namespace safectrl {

struct Assignment {
  int var = -1;
  Expr value;
};

struct Branch {
  Expr prob;  // evaluated per state; may reference parameters until bound
  std::vector<Assignment> assigns;
};

/// One guarded command `[label] guard -> p1:u1 + ... ;`.
struct Command {
  std::string label;
  Expr guard;
  std::vector<Branch> branches;
};

struct RewardItem {
  std::string action;
  Expr guard;
  Expr value;
};

struct RewardStruct {
  std::string name;
  std::vector<RewardItem> items;
};

enum class ModelKind { Mdp, Dtmc };

struct ProcessModel {
  ModelKind kind = ModelKind::Mdp;
  DeclTable decls;
  std::vector<std::pair<std::string, Expr>> formulas;           // inlined on reference
  std::vector<std::pair<std::string, Expr>> labels;
  std::vector<Command> commands;
  std::vector<RewardStruct> rewards;
  // DTMC kind only: commands with these labels resolve deterministically (the
  // first enabled one in declaration order wins); everything else that stays
  // simultaneously enabled is a uniform random choice.
  std::vector<std::string> priority_labels;

  const Expr* find_formula(const std::string& name) const;
  const Expr* find_label(const std::string& name) const;
  State initial_state() const;
  /// Names of `const` declarations without a defining literal.
  std::vector<std::string> parameter_names() const;
};

struct ExplicitAction {
  std::string label;
  std::vector<std::pair<std::uint32_t, double>> succ;  // (state index, probability)
  std::vector<double> rewards;                          // by reward-structure index
};

struct ExplicitState {
  std::vector<ExplicitAction> actions;
};

/// Enumerated MDP or DTMC. State indices are dense in BFS discovery order.
struct ExplicitModel {
  ModelKind kind = ModelKind::Mdp;
  std::vector<State> states;
  std::vector<ExplicitState> trans;
  std::uint32_t initial = 0;
  std::vector<std::string> reward_names;
  std::vector<std::pair<std::string, Expr>> labels;  // copied from the model
  DeclTable decls;

  std::size_t num_states() const { return states.size(); }
  int reward_index(const std::string& name) const;
  /// States satisfying a boolean expression over the state variables.
  std::vector<bool> sat_expr(const Expr& e) const;
  const Expr* find_label(const std::string& name) const;
};

struct ExpandOptions {
  std::size_t state_cap = 5000000;
  double prob_tolerance = 1e-9;
};

/// Memoryless deterministic policy: per-state index of the chosen action.
struct Policy {
  std::vector<std::int32_t> choice;  // -1 where the state has no action
};

ProcessModel parse_model(const std::string& text);

/// Parses an expression in the context of a model: formula references are
/// inlined, constants folded, parameters kept symbolic.
Expr parse_model_expr(const std::string& text, const ProcessModel& m);

/// Serializes a model back into its text format; parse(print(m)) is
/// structurally equal to m.
std::string print_model(const ProcessModel& m);

ExplicitModel expand(const ProcessModel& m, const std::map<std::string, Value>& params,
                     const ExpandOptions& opts = {});

struct DeadlockSets {
  std::vector<std::uint32_t> final_states;
  std::vector<std::uint32_t> early;  // deadlocked but not final
};

DeadlockSets deadlock_states(const ExplicitModel& x, const Expr& final_expr);

ExplicitModel induced_dtmc(const ExplicitModel& mdp, const Policy& pi);

}  // namespace safectrl
